#include "topo/probe.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <numeric>
#include <optional>
#include <thread>
#include <set>

#include "topo/error.hpp"
#include "topo/rng.hpp"

namespace topo {

namespace {

Eigen::MatrixXd standardise(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& scale) {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

// Row-wise softmax, returned in place of the logits.
void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - m).exp();
    z.row(r) /= z.row(r).sum();
  }
}

double cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  double loss = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    loss += lse - logits(r, labels[r]);
  }
  return loss / static_cast<double>(logits.rows());
}

}  // namespace

ProbeOptions ProbeOptions::for_task(const std::string& task) {
  ProbeOptions o;
  if (task == "genus") {
    o.classes = 11;
    o.first_label = 0;
  } else if (task == "components" || task == "beta0") {
    o.classes = 6;
    o.first_label = 1;
  } else {
    fail(Errc::invalid_parameter, "unknown probe task '" + task + "' (expected genus or beta0)");
  }
  return o;
}

Eigen::MatrixXd SoftmaxModel::logits(const Eigen::MatrixXd& x) const {
  require(x.cols() == weights.rows(), "feature width does not match the probe");
  return (standardise(x, mean, scale) * weights).rowwise() + bias.transpose();
}

std::vector<int> SoftmaxModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd z = logits(x);
  std::vector<int> out(z.rows());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    Eigen::Index c;
    z.row(r).maxCoeff(&c);
    out[r] = static_cast<int>(c);
  }
  return out;
}

SoftmaxModel fit_softmax_regression(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes,
                                    int steps, double learning_rate, std::vector<double>* loss_history) {
  require(x.rows() > 0 && static_cast<std::size_t>(x.rows()) == labels.size(), "labels must match feature rows");
  require(classes >= 2, "a probe needs at least two classes");
  require(steps >= 0 && learning_rate > 0.0, "invalid optimiser settings");
  for (int y : labels) require(y >= 0 && y < classes, "label out of range");

  const auto n = x.rows();
  SoftmaxModel m;
  m.mean = x.colwise().mean().transpose();
  m.scale = ((x.rowwise() - m.mean.transpose()).array().square().colwise().sum() / static_cast<double>(n))
                .sqrt()
                .transpose();
  for (auto& s : m.scale) s = s > 1e-12 ? s : 1.0;
  const Eigen::MatrixXd xs = standardise(x, m.mean, m.scale);
  m.weights = Eigen::MatrixXd::Zero(x.cols(), classes);
  m.bias = Eigen::VectorXd::Zero(classes);

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, classes);
  for (Eigen::Index r = 0; r < n; ++r) onehot(r, labels[r]) = 1.0;

  for (int step = 0; step <= steps; ++step) {
    Eigen::MatrixXd z = (xs * m.weights).rowwise() + m.bias.transpose();
    if (loss_history) loss_history->push_back(cross_entropy(z, labels));
    if (step == steps) break;
    softmax_rows(z);
    const Eigen::MatrixXd g = (z - onehot) / static_cast<double>(n);
    m.weights -= learning_rate * (xs.transpose() * g);
    m.bias -= learning_rate * g.colwise().sum().transpose();
  }
  return m;
}

ProbeResult train_linear_probe(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                               const ProbeOptions& options) {
  const auto n = static_cast<std::size_t>(x.rows());
  require(n == labels.size(), "labels must match feature rows");
  require(options.folds >= 2, "cross validation needs at least two folds");
  require(n >= static_cast<std::size_t>(options.folds), "fewer samples than folds");

  ProbeResult result;
  std::vector<int> y(n);
  if (options.classes > 0) {
    require(options.classes >= 2, "a probe needs at least two classes");
    result.classes = options.classes;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = labels[i] - options.first_label;
      if (y[i] < 0 || y[i] >= options.classes) {
        fail(Errc::invalid_parameter, "label " + std::to_string(labels[i]) + " is outside the task range");
      }
    }
  } else {
    const std::set<int> distinct(labels.begin(), labels.end());
    const std::vector<int> classes(distinct.begin(), distinct.end());
    if (classes.size() < 2) fail(Errc::invalid_parameter, "labels contain a single class");
    result.classes = static_cast<int>(classes.size());
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    }
  }
  if (n < 5 * static_cast<std::size_t>(result.classes)) {
    fail(Errc::invalid_parameter, "a probe over " + std::to_string(result.classes) + " classes needs at least " +
                                      std::to_string(5 * result.classes) + " samples");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(options.seed, "folds"));
  rng.shuffle(order);

  const auto k = static_cast<std::size_t>(options.folds);
  std::vector<std::optional<double>> accuracy(k);
  auto run_fold = [&](std::size_t f) {
    const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < n; ++i) (i >= lo && i < hi ? test : train).push_back(order[i]);

    std::vector<int> ytrain;
    Eigen::MatrixXd xtrain(train.size(), x.cols()), xtest(test.size(), x.cols());
    for (std::size_t i = 0; i < train.size(); ++i) {
      xtrain.row(i) = x.row(train[i]);
      ytrain.push_back(y[train[i]]);
    }
    for (std::size_t i = 0; i < test.size(); ++i) xtest.row(i) = x.row(test[i]);
    if (std::set<int>(ytrain.begin(), ytrain.end()).size() < 2) return;
    const auto model =
        fit_softmax_regression(xtrain, ytrain, result.classes, options.steps, options.learning_rate);
    const auto pred = model.predict(xtest);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) correct += pred[i] == y[test[i]];
    accuracy[f] = static_cast<double>(correct) / static_cast<double>(test.size());
  };
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t f; (f = next.fetch_add(1)) < k;) run_fold(f);
    };
    const auto jobs = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.jobs, 1)), 1, k);
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t f = 0; f < k; ++f) {
    if (accuracy[f]) {
      result.fold_accuracy.push_back(*accuracy[f]);
    } else {
      result.warnings.push_back("fold " + std::to_string(f) + " skipped: training split has a single class");
    }
  }
  if (result.fold_accuracy.empty()) fail(Errc::invalid_parameter, "every fold was skipped");
  const double m = std::accumulate(result.fold_accuracy.begin(), result.fold_accuracy.end(), 0.0) /
                   static_cast<double>(result.fold_accuracy.size());
  double v = 0.0;
  for (double a : result.fold_accuracy) v += (a - m) * (a - m);
  result.mean_accuracy = m;
  result.std_accuracy = std::sqrt(v / static_cast<double>(result.fold_accuracy.size()));
  return result;
}

}  // namespace topo
