#include "topo/point_cloud.hpp"

#include <algorithm>
#include <cmath>

#include "topo/error.hpp"
#include "topo/rng.hpp"

namespace topo {

SurfaceSample sample_surface_with_faces(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed) {
  require(n_points >= 1, "need at least one sample point");
  validate_indices(mesh);
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    total += 0.5 * (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).norm();
    cumulative.push_back(total);
  }
  require(total > 0.0, "cannot sample a mesh with zero surface area");

  Rng rng(derive_seed(seed, "sample_surface"));
  SurfaceSample out;
  out.cloud.points.reserve(n_points);
  out.triangle.reserve(n_points);
  for (std::size_t s = 0; s < n_points; ++s) {
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    const auto t = static_cast<std::size_t>(it - cumulative.begin());
    const auto& tri = mesh.triangles[t];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3 p = (1.0 - r1) * mesh.vertices[tri[0]] + r1 * (1.0 - r2) * mesh.vertices[tri[1]] +
                   r1 * r2 * mesh.vertices[tri[2]];
    out.cloud.points.push_back(p);
    out.triangle.push_back(static_cast<int>(t));
  }
  return out;
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed) {
  return sample_surface_with_faces(mesh, n_points, seed).cloud;
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  require(!cloud.empty(), "cannot normalize an empty cloud");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : cloud.points) centroid += p;
  centroid /= static_cast<double>(cloud.size());
  PointCloud out;
  out.points.reserve(cloud.size());
  double max_norm = 0.0;
  for (const auto& p : cloud.points) {
    out.points.push_back(p - centroid);
    max_norm = std::max(max_norm, out.points.back().norm());
  }
  for (auto& p : out.points) p = max_norm > 0.0 ? Vec3(p / max_norm) : Vec3::Zero();
  return out;
}

}  // namespace topo
