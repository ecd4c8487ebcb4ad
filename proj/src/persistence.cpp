#include "topo/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <unordered_map>

#include "topo/error.hpp"
#include "topo/io.hpp"
#include "topo/union_find.hpp"

namespace topo {

PersistenceDiagram finite_part(const PersistenceDiagram& diagram) {
  PersistenceDiagram out = diagram;
  std::erase_if(out.pairs, [](const PersistencePair& p) { return p.essential; });
  return out;
}

namespace {

void check_cloud(const PointCloud& cloud, double max_edge, std::size_t point_cap) {
  require(!cloud.points.empty(), "point cloud is empty");
  require(max_edge > 0.0 && std::isfinite(max_edge), "max_edge must be positive");
  if (cloud.points.size() > point_cap) {
    fail(Errc::size_limit, "Rips filtration on " + std::to_string(cloud.points.size()) +
                               " points exceeds the cap of " + std::to_string(point_cap));
  }
}

std::vector<double> distance_matrix(const PointCloud& cloud) {
  const std::size_t n = cloud.points.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = (cloud.points[i] - cloud.points[j]).norm();
  }
  return d;
}

bool simplex_less(const Simplex& a, const Simplex& b) {
  if (a.value != b.value) return a.value < b.value;
  if (a.dim != b.dim) return a.dim < b.dim;
  return a.vertices < b.vertices;
}

void add_pair(PersistenceDiagram& diagram, double birth, double death) {
  if (death > birth) diagram.pairs.push_back({birth, death, false});
}

void sort_pairs(PersistenceDiagram& diagram) {
  std::sort(diagram.pairs.begin(), diagram.pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
    return std::tie(a.birth, a.death, a.essential) < std::tie(b.birth, b.death, b.essential);
  });
}

using Column = std::vector<int>;  // ascending row indices over Z/2

void add_columns(Column& target, const Column& source, Column& scratch) {
  scratch.clear();
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(scratch));
  target.swap(scratch);
}

}  // namespace

Filtration rips_filtration(const PointCloud& cloud, double max_edge, int max_dim, std::size_t point_cap) {
  check_cloud(cloud, max_edge, point_cap);
  require(max_dim >= 0 && max_dim <= 2, "max_dim must be 0, 1 or 2");
  const std::size_t n = cloud.points.size();
  const auto d = distance_matrix(cloud);
  Filtration f;
  f.point_count = n;
  f.max_edge = max_edge;
  for (std::size_t i = 0; i < n; ++i) f.simplices.push_back({{static_cast<int>(i), -1, -1}, 0, 0.0});
  if (max_dim >= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (d[i * n + j] <= max_edge) f.simplices.push_back({{int(i), int(j), -1}, 1, d[i * n + j]});
      }
    }
  }
  if (max_dim >= 2) {
    // A dense cloud gives n^3/6 triangles; refuse before exhausting memory.
    constexpr std::size_t kTriangleLimit = 50'000'000;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (d[i * n + j] > max_edge) continue;
        for (std::size_t k = j + 1; k < n; ++k) {
          if (d[i * n + k] > max_edge || d[j * n + k] > max_edge) continue;
          if (++count > kTriangleLimit) {
            fail(Errc::size_limit, "explicit Rips filtration exceeds the triangle limit; use rips_persistence");
          }
          const double value = std::max({d[i * n + j], d[i * n + k], d[j * n + k]});
          f.simplices.push_back({{int(i), int(j), int(k)}, 2, value});
        }
      }
    }
  }
  std::sort(f.simplices.begin(), f.simplices.end(), simplex_less);
  return f;
}

PersistenceDiagram compute_persistence(const Filtration& filtration, int q) {
  require(q == 0 || q == 1, "only dimensions 0 and 1 are supported");
  const auto& s = filtration.simplices;
  const std::size_t n = filtration.point_count;

  // Position of every vertex and edge in the filtration order.
  std::vector<int> vertex_pos(n, -1);
  std::vector<int> edge_pos(n * n, -1);
  for (std::size_t idx = 0; idx < s.size(); ++idx) {
    const auto& v = s[idx].vertices;
    if (s[idx].dim == 0) vertex_pos[v[0]] = static_cast<int>(idx);
    if (s[idx].dim == 1) edge_pos[v[0] * n + v[1]] = static_cast<int>(idx);
  }
  auto boundary = [&](const Simplex& x) {
    Column c;
    const auto& v = x.vertices;
    if (x.dim == 1) {
      c = {vertex_pos[v[0]], vertex_pos[v[1]]};
    } else if (x.dim == 2) {
      c = {edge_pos[v[0] * n + v[1]], edge_pos[v[0] * n + v[2]], edge_pos[v[1] * n + v[2]]};
    }
    for (int r : c) require(r >= 0, "filtration is missing a face");
    std::sort(c.begin(), c.end());
    return c;
  };

  std::vector<int> owner(s.size(), -1);  // row -> column whose reduced low it is
  std::vector<Column> reduced(s.size());
  std::vector<char> cleared(s.size(), 0);
  std::vector<char> negative(s.size(), 0);
  Column scratch;
  auto reduce_dim = [&](int dim) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j].dim != dim || cleared[j]) continue;
      Column col = boundary(s[j]);
      while (!col.empty() && owner[col.back()] >= 0) add_columns(col, reduced[owner[col.back()]], scratch);
      if (col.empty()) continue;
      owner[col.back()] = static_cast<int>(j);
      cleared[col.back()] = 1;  // a positive simplex: its own column reduces to zero
      negative[j] = 1;
      reduced[j] = std::move(col);
    }
  };

  PersistenceDiagram diagram;
  diagram.dim = q;
  diagram.provenance.point_count = n;
  diagram.provenance.max_edge = filtration.max_edge;
  if (q == 0) {
    reduce_dim(1);
  } else {
    reduce_dim(2);
    reduce_dim(1);
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].dim != q || negative[i]) continue;
    if (owner[i] >= 0) {
      add_pair(diagram, s[i].value, s[owner[i]].value);
    } else {
      diagram.pairs.push_back({s[i].value, filtration.max_edge, true});
    }
  }
  sort_pairs(diagram);
  return diagram;
}

namespace {

// Triangles are totally ordered by their edge lengths sorted descending, then
// by vertex code. The first component is the filtration value; the rest only
// fix ties, which never changes the diagram but makes minimal cofacets cheap
// to find from distance-sorted neighbour lists.
struct TriangleKey {
  double d1, d2, d3;
  std::uint64_t code;
};

bool key_less(const TriangleKey& a, const TriangleKey& b) {
  return std::tie(a.d1, a.d2, a.d3, a.code) < std::tie(b.d1, b.d2, b.d3, b.code);
}

struct KeyGreater {
  bool operator()(const TriangleKey& a, const TriangleKey& b) const { return key_less(b, a); }
};

using KeyHeap = std::priority_queue<TriangleKey, std::vector<TriangleKey>, KeyGreater>;

class RipsCohomology {
 public:
  RipsCohomology(const PointCloud& cloud, double max_edge) : n_(cloud.points.size()), max_edge_(max_edge) {
    dist_ = distance_matrix(cloud);
    rank_.assign(n_ * n_, -1);
    neighbors_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (j != i && dist_[i * n_ + j] <= max_edge_) neighbors_[i].push_back(static_cast<int>(j));
      }
      std::sort(neighbors_[i].begin(), neighbors_[i].end(), [&](int x, int y) {
        const double dx = dist_[i * n_ + x], dy = dist_[i * n_ + y];
        return dx != dy ? dx < dy : x < y;
      });
      for (int j : neighbors_[i]) {
        if (static_cast<std::size_t>(j) > i) edges_.push_back({static_cast<int>(i), j});
      }
    }
    std::sort(edges_.begin(), edges_.end(), [&](const auto& a, const auto& b) {
      const double da = d(a[0], a[1]), db = d(b[0], b[1]);
      return da != db ? da < db : a < b;
    });
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      rank_[edges_[e][0] * n_ + edges_[e][1]] = rank_[edges_[e][1] * n_ + edges_[e][0]] = static_cast<int>(e);
    }
  }

  PersistenceDiagram h0(std::vector<char>& merge_edge) const {
    PersistenceDiagram diagram;
    diagram.dim = 0;
    merge_edge.assign(edges_.size(), 0);
    UnionFind uf(n_);
    std::size_t components = n_;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      if (uf.unite(edges_[e][0], edges_[e][1])) {
        merge_edge[e] = 1;
        --components;
        add_pair(diagram, 0.0, edge_value(e));
      }
    }
    for (std::size_t c = 0; c < components; ++c) diagram.pairs.push_back({0.0, max_edge_, true});
    return diagram;
  }

  // Columns are edges in decreasing order; edges that merged components are
  // cleared. A column is the coboundary of a sum of edges (kept as a list), and
  // its pivot is the minimal triangle. The working heap only holds cofacets up
  // to a diameter bound that grows when the heap runs dry.
  PersistenceDiagram h1(const std::vector<char>& merge_edge) const {
    PersistenceDiagram diagram;
    diagram.dim = 1;
    std::unordered_map<std::uint64_t, std::vector<int>> pivot_columns;
    KeyHeap heap;
    std::vector<int> working;

    for (std::size_t r = edges_.size(); r-- > 0;) {
      if (merge_edge[r]) continue;
      const int e = static_cast<int>(r);
      const auto first = min_cofacet(e);
      if (!first) {
        diagram.pairs.push_back({edge_value(e), max_edge_, true});
        continue;
      }
      if (!pivot_columns.contains(first->code)) {
        pivot_columns.emplace(first->code, std::vector<int>{e});
        add_pair(diagram, edge_value(e), first->d1);
        continue;
      }
      heap = {};
      working.assign(1, e);
      double bound = first->d1;
      push_coboundary(e, -1.0, bound, heap);
      for (;;) {
        auto pivot = pop_pivot(heap);
        while (!pivot && bound < max_edge_) {
          const double next = std::min(max_edge_, std::max(bound * 1.25, bound + 1e-3));
          for (int w : canonical(working)) push_coboundary(w, bound, next, heap);
          bound = next;
          pivot = pop_pivot(heap);
        }
        if (!pivot) {
          diagram.pairs.push_back({edge_value(e), max_edge_, true});
          break;
        }
        const auto it = pivot_columns.find(pivot->code);
        if (it == pivot_columns.end()) {
          pivot_columns.emplace(pivot->code, canonical(working));
          add_pair(diagram, edge_value(e), pivot->d1);
          break;
        }
        // The owner's column has the same pivot, so its entries below the
        // pivot cancel among themselves and need not be pushed.
        heap.push(*pivot);
        for (int other : it->second) {
          working.push_back(other);
          push_coboundary(other, -1.0, bound, heap, &*pivot);
        }
        if (working.size() > 64 && working.size() % 64 == 0) working = canonical(working);
      }
    }
    return diagram;
  }

 private:
  double d(int a, int b) const { return dist_[static_cast<std::size_t>(a) * n_ + b]; }
  double edge_value(std::size_t e) const { return d(edges_[e][0], edges_[e][1]); }
  int rank(int a, int b) const { return rank_[static_cast<std::size_t>(a) * n_ + b]; }

  TriangleKey key(int a, int b, int c) const {
    double l[3] = {d(a, b), d(a, c), d(b, c)};
    std::sort(l, l + 3, std::greater<>());
    int v[3] = {a, b, c};
    std::sort(v, v + 3);
    return {l[0], l[1], l[2], (static_cast<std::uint64_t>(v[0]) * n_ + v[1]) * n_ + v[2]};
  }

  // Walks neighbours of a by increasing distance r; a cofacet through c has
  // d1 >= max(d_ab, r), and when d1 == d_ab also d2 >= r, so the walk stops
  // as soon as neither can beat the best key found.
  std::optional<TriangleKey> min_cofacet(int e) const {
    const int a = edges_[e][0], b = edges_[e][1];
    const double dab = edge_value(e);
    std::optional<TriangleKey> best;
    for (int c : neighbors_[a]) {
      const double r = d(a, c);
      if (best && (std::max(dab, r) > best->d1 || (best->d1 == dab && r > best->d2))) break;
      if (c == b) continue;
      const double dbc = d(b, c);
      if (dbc > max_edge_) continue;
      if (best) {
        // Cheap rejection on the two leading components before building a key.
        const double d1 = std::max({dab, r, dbc});
        if (d1 > best->d1) continue;
        if (d1 == best->d1) {
          const double d2 = d1 == dab ? std::max(r, dbc) : (d1 == r ? std::max(dab, dbc) : std::max(dab, r));
          if (d2 > best->d2) continue;
        }
      }
      const auto t = key(a, b, c);
      if (!best || key_less(t, *best)) best = t;
    }
    return best;
  }

  // Cofacets of e with lo < d1 <= hi, optionally only those above `floor`.
  void push_coboundary(int e, double lo, double hi, KeyHeap& heap, const TriangleKey* floor = nullptr) const {
    const int a = edges_[e][0], b = edges_[e][1];
    const double dab = edge_value(e);
    if (dab > hi) return;
    for (int c : neighbors_[a]) {
      const double r = d(a, c);
      if (r > hi) break;
      if (c == b) continue;
      const double dbc = d(b, c);
      const double d1 = std::max({dab, r, dbc});
      if (d1 <= lo || d1 > hi || dbc > max_edge_) continue;
      if (floor && d1 < floor->d1) continue;
      const auto t = key(a, b, c);
      if (floor && key_less(t, *floor)) continue;
      heap.push(t);
    }
  }

  static std::optional<TriangleKey> pop_pivot(KeyHeap& heap) {
    while (!heap.empty()) {
      const TriangleKey top = heap.top();
      heap.pop();
      if (!heap.empty() && heap.top().code == top.code) {
        heap.pop();
        continue;
      }
      return top;
    }
    return std::nullopt;
  }

  // Sorted list with pairs of equal entries cancelled (sums over Z/2).
  static std::vector<int> canonical(std::vector<int> edges) {
    std::sort(edges.begin(), edges.end());
    std::vector<int> out;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (i + 1 < edges.size() && edges[i] == edges[i + 1]) {
        ++i;
      } else {
        out.push_back(edges[i]);
      }
    }
    return out;
  }

  std::size_t n_;
  double max_edge_;
  std::vector<double> dist_;
  std::vector<int> rank_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::array<int, 2>> edges_;
};

}  // namespace

std::vector<PersistenceDiagram> rips_persistence(const PointCloud& cloud, const RipsOptions& options,
                                                 std::span<const int> dims) {
  check_cloud(cloud, options.max_edge, options.point_cap);
  for (int q : dims) require(q == 0 || q == 1, "only dimensions 0 and 1 are supported");
  const RipsCohomology engine(cloud, options.max_edge);
  std::vector<char> merge_edge;
  PersistenceDiagram h0 = engine.h0(merge_edge);
  std::optional<PersistenceDiagram> h1;
  std::vector<PersistenceDiagram> out;
  for (int q : dims) {
    PersistenceDiagram diagram;
    if (q == 0) {
      diagram = h0;
    } else {
      if (!h1) h1 = engine.h1(merge_edge);
      diagram = *h1;
    }
    diagram.provenance.point_count = cloud.points.size();
    diagram.provenance.max_edge = options.max_edge;
    sort_pairs(diagram);
    out.push_back(std::move(diagram));
  }
  return out;
}

PersistenceDiagram quantile_threshold(const PersistenceDiagram& diagram, double keep_fraction) {
  require(keep_fraction > 0.0 && keep_fraction <= 1.0, "keep fraction must lie in (0, 1]");
  PersistenceDiagram out = diagram;
  auto& p = out.pairs;
  std::sort(p.begin(), p.end(), [](const PersistencePair& a, const PersistencePair& b) {
    const double pa = a.persistence(), pb = b.persistence();
    if (pa != pb) return pa > pb;
    return std::tie(a.birth, a.death) < std::tie(b.birth, b.death);
  });
  const auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(p.size()) - 1e-9));
  p.resize(std::min(p.size(), keep));
  return out;
}

std::pair<std::vector<PersistenceDiagram>, double> scale_dataset(std::span<const PersistenceDiagram> diagrams) {
  double scale = 0.0;
  bool any = false;
  for (const auto& diagram : diagrams) {
    for (const auto& p : diagram.pairs) {
      scale = std::max({scale, p.birth, p.death});
      any = true;
    }
  }
  require(any, "cannot scale a collection of empty diagrams");
  require(scale > 0.0, "all diagram coordinates are zero");
  std::vector<PersistenceDiagram> out(diagrams.begin(), diagrams.end());
  for (auto& diagram : out) {
    for (auto& p : diagram.pairs) {
      p.birth /= scale;
      p.death /= scale;
    }
    diagram.provenance.scale *= scale;
  }
  return {std::move(out), scale};
}

void write_diagram_csv(const std::filesystem::path& path, std::span<const PersistenceDiagram> diagrams,
                       bool include_essential) {
  auto out = open_output(path);
  out << "dim,birth,death\n";
  for (const auto& diagram : diagrams) {
    for (const auto& p : diagram.pairs) {
      if (p.essential && !include_essential) continue;
      out << diagram.dim << ',' << format_double(p.birth) << ',' << format_double(p.death) << '\n';
    }
  }
  if (!out) fail(Errc::io_error, "failed writing '" + path.string() + "'");
}

std::vector<PersistenceDiagram> read_diagram_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::io_error, "'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "dim,birth,death") fail(Errc::io_error, "'" + path.string() + "' lacks the dim,birth,death header");
  std::map<int, PersistenceDiagram> by_dim;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) fail(Errc::io_error, path.string() + ":" + std::to_string(row) + ": expected 3 fields");
    const double dim = parse_double(fields[0]);
    if (dim != 0.0 && dim != 1.0) fail(Errc::io_error, path.string() + ":" + std::to_string(row) + ": bad dim");
    const double birth = parse_double(fields[1]), death = parse_double(fields[2]);
    if (!std::isfinite(birth) || !std::isfinite(death)) {
      fail(Errc::io_error, path.string() + ":" + std::to_string(row) + ": non-finite coordinate");
    }
    auto& diagram = by_dim[static_cast<int>(dim)];
    diagram.dim = static_cast<int>(dim);
    diagram.pairs.push_back({birth, death, false});
  }
  std::vector<PersistenceDiagram> out;
  for (auto& [dim, diagram] : by_dim) out.push_back(std::move(diagram));
  return out;
}

PersistenceDiagram read_diagram_csv(const std::filesystem::path& path, int dim) {
  for (auto& diagram : read_diagram_csv(path)) {
    if (diagram.dim == dim) return diagram;
  }
  PersistenceDiagram empty;
  empty.dim = dim;
  return empty;
}

}  // namespace topo
