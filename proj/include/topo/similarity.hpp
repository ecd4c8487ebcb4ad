#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace topo {

/// Linear centred kernel alignment between two row-aligned representations.
/// Throws undefined_similarity when either side has zero variance.
double linear_cka(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Returns a copy of `a` in which floor(alpha*n) randomly chosen rows are
/// cyclically shifted among themselves, so none keeps its original position.
Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& a, double alpha, std::uint64_t seed);

struct AblationResult {
  double alpha = 0.0;
  double mean = 0.0;
  std::vector<double> values;  // one per repeat
};

/// Mean CKA(permute_rows(a), b) over `repeats` independent permutations.
AblationResult permutation_ablation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double alpha,
                                    std::uint64_t seed, int repeats = 3);

}  // namespace topo
