#include "topo/diagram_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "topo/assignment.hpp"
#include "topo/error.hpp"
#include "topo/io.hpp"

namespace topo {

namespace {

using Pairs = std::vector<PersistencePair>;

// Sorted coordinates without exact-diagonal points, which cost nothing to
// leave unmatched. Sorting makes both metrics independent of input order.
Pairs canonical(const PersistenceDiagram& d) {
  Pairs out;
  for (const auto& p : d.pairs) {
    require(std::isfinite(p.birth) && std::isfinite(p.death), "diagram has non-finite coordinates");
    if (p.death != p.birth) out.push_back({p.birth, p.death, false});
  }
  std::sort(out.begin(), out.end(), [](const PersistencePair& x, const PersistencePair& y) {
    return std::tie(x.birth, x.death) < std::tie(y.birth, y.death);
  });
  return out;
}

bool pairs_less(const Pairs& x, const Pairs& y) {
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(), [](const auto& p, const auto& q) {
    return std::tie(p.birth, p.death) < std::tie(q.birth, q.death);
  });
}

// Orders the two diagrams canonically so that d(a, b) and d(b, a) run the
// exact same floating-point computation.
std::pair<Pairs, Pairs> ordered(const PersistenceDiagram& a, const PersistenceDiagram& b) {
  Pairs x = canonical(a), y = canonical(b);
  if (pairs_less(y, x)) std::swap(x, y);
  return {std::move(x), std::move(y)};
}

double diagonal_sq(const PersistencePair& p) {
  const double h = p.death - p.birth;
  return 0.5 * h * h;
}

double diagonal_linf(const PersistencePair& p) { return 0.5 * std::abs(p.death - p.birth); }

double linf(const PersistencePair& p, const PersistencePair& q) {
  return std::max(std::abs(p.birth - q.birth), std::abs(p.death - q.death));
}

}  // namespace

double wasserstein2(const PersistenceDiagram& a, const PersistenceDiagram& b) {
  const auto [x, y] = ordered(a, b);
  const auto m = static_cast<Eigen::Index>(x.size()), n = static_cast<Eigen::Index>(y.size());
  if (m + n == 0) return 0.0;
  // Rows: x then diagonal slots for y. Columns: y then diagonal slots for x.
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(m + n, m + n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double db = x[i].birth - y[j].birth, dd = x[i].death - y[j].death;
      cost(i, j) = db * db + dd * dd;
    }
    for (Eigen::Index k = 0; k < m; ++k) cost(i, n + k) = diagonal_sq(x[i]);
  }
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index j = 0; j < n; ++j) cost(m + l, j) = diagonal_sq(y[j]);
  }
  return std::sqrt(std::max(0.0, hungarian(cost).cost));
}

double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b) {
  const auto [x, y] = ordered(a, b);
  const std::size_t m = x.size(), n = y.size();
  if (m + n == 0) return 0.0;
  const int size = static_cast<int>(m + n);
  auto edge_cost = [&](std::size_t i, std::size_t j) {
    if (i < m && j < n) return linf(x[i], y[j]);
    if (i < m) return diagonal_linf(x[i]);
    if (j < n) return diagonal_linf(y[j]);
    return 0.0;
  };
  std::vector<double> candidates{0.0};
  for (std::size_t i = 0; i < m; ++i) {
    candidates.push_back(diagonal_linf(x[i]));
    for (std::size_t j = 0; j < n; ++j) candidates.push_back(linf(x[i], y[j]));
  }
  for (const auto& q : y) candidates.push_back(diagonal_linf(q));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // Point i < m may use the diagonal slot only of its own index and vice
  // versa; diagonal-to-diagonal edges are free.
  auto feasible = [&](double t) {
    std::vector<std::vector<int>> adjacency(size);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (edge_cost(i, j) <= t) adjacency[i].push_back(static_cast<int>(j));
      }
      if (diagonal_linf(x[i]) <= t) adjacency[i].push_back(static_cast<int>(n + i));
    }
    for (std::size_t l = 0; l < n; ++l) {
      if (diagonal_linf(y[l]) <= t) adjacency[m + l].push_back(static_cast<int>(l));
      for (std::size_t k = 0; k < m; ++k) adjacency[m + l].push_back(static_cast<int>(n + k));
    }
    return max_bipartite_matching(adjacency, size) == size;
  };
  std::size_t lo = 0, hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (feasible(candidates[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return candidates[lo];
}

PersistenceImage persistence_image(const PersistenceDiagram& diagram, const ImageParams& params) {
  require(params.resolution >= 2, "image resolution must be at least 2");
  require(params.sigma > 0.0 && std::isfinite(params.sigma), "image bandwidth must be positive");
  PersistenceImage image;
  image.params = params;
  const int res = params.resolution;
  image.pixels.assign(static_cast<std::size_t>(res) * res, 0.0);
  const double h = 1.0 / res;
  const double norm = h * h / (2.0 * std::numbers::pi * params.sigma * params.sigma);
  const double inv = 1.0 / (2.0 * params.sigma * params.sigma);
  std::vector<double> gx(res), gy(res);
  for (const auto& p : diagram.pairs) {
    require(std::isfinite(p.birth) && std::isfinite(p.death), "diagram has non-finite coordinates");
    if (std::abs(p.birth) > 1.5 || std::abs(p.death) > 1.5) {
      fail(Errc::invalid_parameter, "diagram coordinates exceed 1.5; scale the dataset first");
    }
    const double pers = p.death - p.birth;
    if (pers == 0.0) continue;
    for (int k = 0; k < res; ++k) {
      const double c = (k + 0.5) * h;
      gx[k] = std::exp(-(c - p.birth) * (c - p.birth) * inv);
      gy[k] = std::exp(-(c - pers) * (c - pers) * inv);
    }
    for (int r = 0; r < res; ++r) {
      const double wr = pers * norm * gy[r];
      for (int c = 0; c < res; ++c) image.pixels[static_cast<std::size_t>(r) * res + c] += wr * gx[c];
    }
  }
  return image;
}

double pie(const PersistenceImage& predicted, const PersistenceImage& truth) {
  require(predicted.params == truth.params, "persistence images were built with different parameters");
  require(predicted.pixels.size() == truth.pixels.size(), "persistence image sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.pixels.size(); ++i) {
    const double d = predicted.pixels[i] - truth.pixels[i];
    s += d * d;
  }
  return s;
}

double pie(const PersistenceDiagram& predicted, const PersistenceDiagram& truth, const ImageParams& params) {
  return pie(persistence_image(predicted, params), persistence_image(truth, params));
}

namespace {

std::vector<double> nearest_distances(const PointCloud& from, const PointCloud& to) {
  std::vector<double> out(from.points.size());
  for (std::size_t i = 0; i < from.points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to.points) best = std::min(best, (from.points[i] - q).squaredNorm());
    out[i] = std::sqrt(best);
  }
  return out;
}

}  // namespace

double hausdorff(const PointCloud& x, const PointCloud& y) {
  require(!x.points.empty() && !y.points.empty(), "Hausdorff distance needs non-empty clouds");
  const auto dx = nearest_distances(x, y), dy = nearest_distances(y, x);
  return std::max(*std::max_element(dx.begin(), dx.end()), *std::max_element(dy.begin(), dy.end()));
}

double chamfer(const PointCloud& x, const PointCloud& y) {
  require(!x.points.empty() && !y.points.empty(), "Chamfer distance needs non-empty clouds");
  const auto dx = nearest_distances(x, y), dy = nearest_distances(y, x);
  double sx = 0.0, sy = 0.0;
  for (double v : dx) sx += v;
  for (double v : dy) sy += v;
  return 0.5 * (sx / dx.size() + sy / dy.size());
}

void write_image_csv(const std::filesystem::path& path, const PersistenceImage& image) {
  auto out = open_output(path);
  const int res = image.params.resolution;
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) out << (c ? "," : "") << format_double(image.at(r, c));
    out << '\n';
  }
  if (!out) fail(Errc::io_error, "failed writing '" + path.string() + "'");
}

}  // namespace topo
