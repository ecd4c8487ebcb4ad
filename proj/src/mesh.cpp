#include "topo/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>

#include "topo/error.hpp"
#include "topo/union_find.hpp"

namespace topo {
namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

std::uint64_t directed_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Undirected edge -> incident triangle indices.
std::unordered_map<std::uint64_t, std::vector<int>> edge_incidence(const TriangleMesh& mesh) {
  std::unordered_map<std::uint64_t, std::vector<int>> incidence;
  incidence.reserve(mesh.triangles.size() * 2);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      incidence[edge_key(tri[k], tri[(k + 1) % 3])].push_back(static_cast<int>(t));
    }
  }
  return incidence;
}

}  // namespace

void validate_indices(const TriangleMesh& mesh) {
  const auto n = static_cast<long>(mesh.vertices.size());
  for (const auto& tri : mesh.triangles) {
    for (int v : tri) {
      if (v < 0 || v >= n) fail(Errc::invalid_parameter, "triangle index out of range");
    }
  }
}

MeshCounts count_simplices(const TriangleMesh& mesh) {
  std::unordered_set<std::uint64_t> edges;
  edges.reserve(mesh.triangles.size() * 2);
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) edges.insert(edge_key(tri[k], tri[(k + 1) % 3]));
  }
  return {mesh.vertices.size(), edges.size(), mesh.triangles.size()};
}

long euler_characteristic(const TriangleMesh& mesh) {
  const auto c = count_simplices(mesh);
  return static_cast<long>(c.vertices) - static_cast<long>(c.edges) + static_cast<long>(c.faces);
}

int connected_components(const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) return 0;
  UnionFind uf(mesh.triangles.size());
  for (const auto& [key, tris] : edge_incidence(mesh)) {
    for (std::size_t i = 1; i < tris.size(); ++i) uf.unite(tris[0], tris[i]);
  }
  int count = 0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) count += uf.find(t) == t;
  return count;
}

bool is_manifold(const TriangleMesh& mesh) {
  const auto incidence = edge_incidence(mesh);
  for (const auto& [key, tris] : incidence) {
    if (tris.size() != 2) return false;
  }
  // Vertex links: with every edge shared by two faces each link vertex has
  // degree two, so the link is a single cycle iff it is connected.
  std::vector<std::vector<std::pair<int, int>>> links(mesh.vertices.size());
  for (const auto& tri : mesh.triangles) {
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) return false;
    for (int k = 0; k < 3; ++k) links[tri[k]].emplace_back(tri[(k + 1) % 3], tri[(k + 2) % 3]);
  }
  for (const auto& link : links) {
    if (link.empty()) continue;
    std::vector<int> nodes;
    for (const auto& [a, b] : link) {
      nodes.push_back(a);
      nodes.push_back(b);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    if (nodes.size() != link.size()) return false;
    UnionFind uf(nodes.size());
    auto index_of = [&](int v) {
      return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };
    std::size_t merges = 0;
    for (const auto& [a, b] : link) merges += uf.unite(index_of(a), index_of(b));
    if (merges != nodes.size() - 1) return false;
  }
  return true;
}

bool is_consistently_oriented(const TriangleMesh& mesh) {
  std::unordered_set<std::uint64_t> directed;
  directed.reserve(mesh.triangles.size() * 3);
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (!directed.insert(directed_key(tri[k], tri[(k + 1) % 3])).second) return false;
    }
  }
  return true;
}

std::vector<TriangleMesh> split_components(const TriangleMesh& mesh) {
  validate_indices(mesh);
  std::vector<TriangleMesh> parts;
  if (mesh.triangles.empty()) return parts;
  UnionFind uf(mesh.triangles.size());
  for (const auto& [key, tris] : edge_incidence(mesh)) {
    for (std::size_t i = 1; i < tris.size(); ++i) uf.unite(tris[0], tris[i]);
  }
  std::unordered_map<std::size_t, std::size_t> root_to_part;
  std::vector<std::unordered_map<int, int>> remaps;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto root = uf.find(t);
    auto [it, inserted] = root_to_part.try_emplace(root, parts.size());
    if (inserted) {
      parts.emplace_back();
      remaps.emplace_back();
    }
    auto& part = parts[it->second];
    auto& remap = remaps[it->second];
    Triangle out{};
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.triangles[t][k];
      auto [vit, fresh] = remap.try_emplace(v, static_cast<int>(part.vertices.size()));
      if (fresh) part.vertices.push_back(mesh.vertices[v]);
      out[k] = vit->second;
    }
    part.triangles.push_back(out);
  }
  return parts;
}

TriangleMesh merge_meshes(const std::vector<TriangleMesh>& meshes) {
  TriangleMesh out;
  for (const auto& m : meshes) {
    const int offset = static_cast<int>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), m.vertices.begin(), m.vertices.end());
    for (const auto& tri : m.triangles) {
      out.triangles.push_back({tri[0] + offset, tri[1] + offset, tri[2] + offset});
    }
  }
  return out;
}

Aabb bounding_box(const TriangleMesh& mesh) {
  require(!mesh.vertices.empty(), "bounding box of an empty mesh");
  Aabb box{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    box.lo = box.lo.cwiseMin(v);
    box.hi = box.hi.cwiseMax(v);
  }
  return box;
}

double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    area += 0.5 * (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).norm();
  }
  return area;
}

double signed_volume(const TriangleMesh& mesh) {
  double volume = 0.0;
  for (const auto& t : mesh.triangles) {
    volume += mesh.vertices[t[0]].dot(mesh.vertices[t[1]].cross(mesh.vertices[t[2]]));
  }
  return volume / 6.0;
}

TriangleMesh center_and_fit(const TriangleMesh& mesh, double radius) {
  const Vec3 center = bounding_box(mesh).center();
  double max_norm = 0.0;
  for (const auto& v : mesh.vertices) max_norm = std::max(max_norm, (v - center).norm());
  require(max_norm > 0.0, "cannot fit a degenerate mesh");
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = (v - center) * (radius / max_norm);
  return out;
}

}  // namespace topo
