#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace topo {

struct SoftmaxModel {
  Eigen::MatrixXd weights;  // features x classes
  Eigen::VectorXd bias;     // classes
  Eigen::VectorXd mean, scale;  // standardisation learned on the training rows

  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

struct ProbeOptions {
  int classes = 0;      // 0: infer from the distinct labels
  int first_label = 0;  // label value mapped to class 0 when `classes` is set
  int folds = 5;
  int steps = 500;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  int jobs = 1;

  /// "genus": 11 classes 0..10, "components" / "beta0": 6 classes 1..6.
  static ProbeOptions for_task(const std::string& task);
};

/// Full-batch gradient descent on mean cross entropy. `loss_history`, when
/// given, receives the training loss before every step and after the last.
SoftmaxModel fit_softmax_regression(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes,
                                    int steps, double learning_rate,
                                    std::vector<double>* loss_history = nullptr);

struct ProbeResult {
  std::vector<double> fold_accuracy;  // evaluated folds only
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  int classes = 0;
  std::vector<std::string> warnings;
};

/// K-fold cross-validated linear probe. Without a fixed class count, labels
/// are remapped to 0..C-1 in sorted order. Folds whose training part has a
/// single class are skipped with a warning.
ProbeResult train_linear_probe(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                               const ProbeOptions& options);

}  // namespace topo
