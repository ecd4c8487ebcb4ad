#include "topo/marching_cubes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mc_tables.hpp"
#include "topo/error.hpp"

namespace topo {

GridSpec padded_grid(const Aabb& box, int resolution, double padding) {
  require(resolution >= 16, "grid resolution must be at least 16");
  require(padding >= 0.0, "grid padding must be non-negative");
  Vec3 extent = box.extent();
  const double longest = extent.maxCoeff();
  require(longest > 0.0, "grid bounds are degenerate");
  // Thin boxes still get a sensible pad along their short axes.
  extent = extent.cwiseMax(Vec3::Constant(0.1 * longest));
  GridSpec grid;
  const Vec3 center = box.center();
  const Vec3 half = 0.5 * extent * (1.0 + 2.0 * padding);
  grid.bounds = {center - half, center + half};
  const double spacing = 2.0 * half.maxCoeff() / (resolution - 1);
  for (int a = 0; a < 3; ++a) {
    const int n = static_cast<int>(std::ceil(2.0 * half[a] / spacing)) + 1;
    grid.samples[a] = std::clamp(n, 16, resolution);
  }
  return grid;
}

TriangleMesh marching_cubes(const ScalarField& field, const GridSpec& grid, double isolevel) {
  const auto [nx, ny, nz] = grid.samples;
  require(nx >= 16 && ny >= 16 && nz >= 16, "marching cubes needs at least 16 samples per axis");
  const Vec3 lo = grid.bounds.lo;
  const Vec3 step = grid.bounds.extent().cwiseQuotient(Vec3(nx - 1, ny - 1, nz - 1));
  require((step.array() > 0.0).all(), "marching cubes bounds are degenerate");

  auto node = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k);
  };
  auto position = [&](int i, int j, int k) { return Vec3(lo.x() + i * step.x(), lo.y() + j * step.y(), lo.z() + k * step.z()); };

  std::vector<double> values(static_cast<std::size_t>(nx) * ny * nz);
  bool crossing = false;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double v = field(position(i, j, k));
        if (!std::isfinite(v)) fail(Errc::numeric_overflow, "scalar field returned a non-finite value");
        values[node(i, j, k)] = v;
        const bool boundary = i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
        if (boundary && v < isolevel) fail(Errc::open_surface, "level set touches the grid boundary");
        crossing = crossing || v < isolevel;
      }
    }
  }
  if (!crossing) fail(Errc::empty_mesh, "field never crosses the isolevel");

  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  // Lattice edge id: lower node index * 3 + axis.
  auto vertex_on_edge = [&](int i, int j, int k, int axis) {
    const std::uint64_t key = static_cast<std::uint64_t>(node(i, j, k)) * 3 + axis;
    auto [it, fresh] = edge_vertex.try_emplace(key, static_cast<int>(mesh.vertices.size()));
    if (fresh) {
      int i1 = i, j1 = j, k1 = k;
      (axis == 0 ? i1 : axis == 1 ? j1 : k1) += 1;
      const double v0 = values[node(i, j, k)];
      const double v1 = values[node(i1, j1, k1)];
      const double t = std::clamp((isolevel - v0) / (v1 - v0), 0.0, 1.0);
      mesh.vertices.push_back(position(i, j, k) + t * (position(i1, j1, k1) - position(i, j, k)));
    }
    return it->second;
  };

  using namespace mc_tables;
  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          if (values[node(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2])] < isolevel) cube |= 1 << c;
        }
        if (cube == 0 || cube == 255) continue;
        int edge_ids[12];
        for (int e = 0; e < 12; ++e) edge_ids[e] = -1;
        auto resolve = [&](int e) {
          if (edge_ids[e] < 0) {
            const int* a = kCorner[kEdgeCorners[e][0]];
            const int* b = kCorner[kEdgeCorners[e][1]];
            const int axis = a[0] != b[0] ? 0 : a[1] != b[1] ? 1 : 2;
            edge_ids[e] = vertex_on_edge(i + std::min(a[0], b[0]), j + std::min(a[1], b[1]),
                                         k + std::min(a[2], b[2]), axis);
          }
          return edge_ids[e];
        };
        for (int t = 0; kTriangles[cube][t] != -1; t += 3) {
          // The table winds triangles clockwise seen from outside; flip to
          // outward-facing counter-clockwise order.
          mesh.triangles.push_back({resolve(kTriangles[cube][t]), resolve(kTriangles[cube][t + 2]),
                                    resolve(kTriangles[cube][t + 1])});
        }
      }
    }
  }
  return mesh;
}

}  // namespace topo
