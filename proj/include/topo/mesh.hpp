#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace topo {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

struct Aabb {
  Vec3 lo;
  Vec3 hi;

  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
};

/// Triangle soup with shared vertices. Triangles are expected to be
/// consistently oriented (outward normals for closed surfaces).
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
};

struct MeshCounts {
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t faces = 0;
};

/// Throws invalid_parameter when a triangle references a missing vertex.
void validate_indices(const TriangleMesh& mesh);

MeshCounts count_simplices(const TriangleMesh& mesh);

/// V - E + F with E counted as unique undirected edges.
long euler_characteristic(const TriangleMesh& mesh);

/// Number of edge-connected triangle groups.
int connected_components(const TriangleMesh& mesh);

/// Every edge has exactly two incident triangles and every vertex link is a
/// single cycle.
bool is_manifold(const TriangleMesh& mesh);

/// Every directed edge appears at most once, i.e. adjacent triangles agree on
/// orientation.
bool is_consistently_oriented(const TriangleMesh& mesh);

/// Splits a mesh into its edge-connected components (unreferenced vertices are
/// dropped).
std::vector<TriangleMesh> split_components(const TriangleMesh& mesh);

/// Disjoint union.
TriangleMesh merge_meshes(const std::vector<TriangleMesh>& meshes);

Aabb bounding_box(const TriangleMesh& mesh);
double surface_area(const TriangleMesh& mesh);
double signed_volume(const TriangleMesh& mesh);

/// Translates the mesh so its bounding-box center sits at the origin and
/// scales it uniformly so the farthest vertex has norm `radius`.
TriangleMesh center_and_fit(const TriangleMesh& mesh, double radius = 1.0);

}  // namespace topo
