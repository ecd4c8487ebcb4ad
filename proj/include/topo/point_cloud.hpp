#pragma once

#include <cstdint>
#include <vector>

#include "topo/mesh.hpp"

namespace topo {

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Area-weighted uniform sampling of the mesh surface. Pure in (mesh, n, seed).
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed);

/// Index of the triangle each sample was drawn from, alongside the cloud.
struct SurfaceSample {
  PointCloud cloud;
  std::vector<int> triangle;
};
SurfaceSample sample_surface_with_faces(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed);

/// Centroid to the origin and largest norm to 1 (all-zero when every point
/// coincides).
PointCloud normalize_unit_sphere(const PointCloud& cloud);

}  // namespace topo
