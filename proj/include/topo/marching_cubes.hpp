#pragma once

#include <array>

#include "topo/implicit.hpp"
#include "topo/mesh.hpp"

namespace topo {

/// Regular sampling lattice: `samples[a]` nodes along axis a spanning `bounds`.
struct GridSpec {
  std::array<int, 3> samples{96, 96, 96};
  Aabb bounds;
};

/// Grid over `box` grown by `padding` (fraction of each extent). The longest
/// axis receives `resolution` samples; the others get the same spacing, never
/// fewer than 16 samples.
GridSpec padded_grid(const Aabb& box, int resolution, double padding = 0.1);

/// Extracts the `isolevel` surface of `field` with the 256-case table and linear
/// edge interpolation. Vertices are keyed by lattice edge, so neighbouring
/// cubes share them exactly and the output is watertight.
///
/// Throws open_surface when the level set reaches the lattice boundary and
/// empty_mesh when the field never crosses the isolevel.
TriangleMesh marching_cubes(const ScalarField& field, const GridSpec& grid, double isolevel = 0.0);

}  // namespace topo
