#include "topo/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topo/error.hpp"
#include "topo/rng.hpp"

namespace topo {

double linear_cka(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.rows() == b.rows(), "representations must have the same number of rows");
  require(a.rows() >= 3, "CKA needs at least three samples");
  const Eigen::MatrixXd ac = a.rowwise() - a.colwise().mean();
  const Eigen::MatrixXd bc = b.rowwise() - b.colwise().mean();
  // ||A^T B||_F^2 / (||A^T A||_F ||B^T B||_F); the smaller Gram side is used.
  auto gram_norm = [](const Eigen::MatrixXd& m) {
    return m.cols() <= m.rows() ? (m.transpose() * m).norm() : (m * m.transpose()).norm();
  };
  const double var_a = ac.squaredNorm(), var_b = bc.squaredNorm();
  if (var_a <= 1e-24 * std::max(1.0, a.squaredNorm()) || var_b <= 1e-24 * std::max(1.0, b.squaredNorm())) {
    fail(Errc::undefined_similarity, "CKA is undefined for a zero-variance representation");
  }
  const double na = gram_norm(ac);
  const double nb = gram_norm(bc);
  const double cross = (ac.transpose() * bc).squaredNorm();
  return cross / (na * nb);
}

Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& a, double alpha, std::uint64_t seed) {
  require(alpha >= 0.0 && alpha <= 1.0, "permutation fraction must lie in [0, 1]");
  const auto n = static_cast<std::size_t>(a.rows());
  const auto k = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) + 1e-9));
  Eigen::MatrixXd out = a;
  if (k < 2) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  for (std::size_t i = 0; i < k; ++i) out.row(order[i]) = a.row(order[(i + 1) % k]);
  return out;
}

AblationResult permutation_ablation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double alpha,
                                    std::uint64_t seed, int repeats) {
  require(repeats > 0, "repeats must be positive");
  AblationResult r;
  r.alpha = alpha;
  for (int i = 0; i < repeats; ++i) {
    r.values.push_back(linear_cka(permute_rows(a, alpha, derive_seed(seed, "ablation", i)), b));
  }
  r.mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / repeats;
  return r;
}

}  // namespace topo
