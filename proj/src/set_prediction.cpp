#include "topo/set_prediction.hpp"

#include <cmath>
#include <fstream>

#include "topo/error.hpp"
#include "topo/io.hpp"

namespace topo {

void LossWeights::validate() const {
  for (double w : {mu_recon, mu_exist, mu_diag, lambda_reg, lambda_exist}) {
    require(w >= 0.0 && std::isfinite(w), "loss weights must be finite and non-negative");
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

namespace {

void check_capacity(const PredictionSet& pred, const std::vector<PersistencePair>& target) {
  if (target.size() > pred.size()) {
    fail(Errc::capacity_exceeded, "target has " + std::to_string(target.size()) + " pairs but only " +
                                      std::to_string(pred.size()) + " predictions");
  }
}

void check_assignment(const PredictionSet& pred, const Assignment& assignment) {
  std::vector<char> seen(pred.size(), 0);
  for (int i : assignment.row_to_col) {
    require(i >= 0 && static_cast<std::size_t>(i) < pred.size() && !seen[i], "assignment is not injective");
    seen[i] = 1;
  }
}

}  // namespace

Eigen::MatrixXd match_cost(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                           const LossWeights& weights) {
  weights.validate();
  check_capacity(pred, target);
  const auto m = static_cast<Eigen::Index>(target.size()), n = static_cast<Eigen::Index>(pred.size());
  Eigen::MatrixXd cost(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pred[i];
    const double absent = weights.lambda_exist * (1.0 - sigmoid(p.logit));
    for (Eigen::Index j = 0; j < m; ++j) {
      const double db = p.birth - target[j].birth, dd = p.death - target[j].death;
      cost(j, i) = weights.lambda_reg * (db * db + dd * dd) + absent;
    }
  }
  return cost;
}

Assignment match(const PredictionSet& pred, const std::vector<PersistencePair>& target, const LossWeights& weights) {
  return hungarian(match_cost(pred, target, weights));
}

std::vector<char> matched_mask(std::size_t n_pred, const Assignment& assignment) {
  std::vector<char> mask(n_pred, 0);
  for (int i : assignment.row_to_col) mask[i] = 1;
  return mask;
}

double loss_recon(const PredictionSet& pred, const std::vector<PersistencePair>& target, const Assignment& assignment) {
  require(assignment.row_to_col.size() == target.size(), "assignment does not cover the target");
  check_assignment(pred, assignment);
  if (target.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    const auto& p = pred[assignment.row_to_col[j]];
    const double db = p.birth - target[j].birth, dd = p.death - target[j].death;
    s += db * db + dd * dd;
  }
  return s / static_cast<double>(target.size());
}

double loss_exist(const PredictionSet& pred, const Assignment& assignment) {
  check_assignment(pred, assignment);
  if (pred.empty()) return 0.0;
  const auto mask = matched_mask(pred.size(), assignment);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += mask[i] ? log_sigmoid(pred[i].logit) : log_sigmoid(-pred[i].logit);
  return -s / static_cast<double>(pred.size());
}

double loss_diag(const PredictionSet& pred, const Assignment& assignment) {
  check_assignment(pred, assignment);
  const auto mask = matched_mask(pred.size(), assignment);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask[i]) continue;
    const double h = pred[i].death - pred[i].birth;
    s += h * h;
    ++count;
  }
  return count ? s / static_cast<double>(count) : 0.0;
}

LossBreakdown total_loss(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                         const LossWeights& weights, const Assignment& assignment) {
  weights.validate();
  check_capacity(pred, target);
  LossBreakdown out;
  out.assignment = assignment;
  out.recon = loss_recon(pred, target, assignment);
  out.exist = loss_exist(pred, assignment);
  out.diag = loss_diag(pred, assignment);
  out.total = weights.mu_recon * out.recon + weights.mu_exist * out.exist + weights.mu_diag * out.diag;
  return out;
}

LossBreakdown total_loss(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                         const LossWeights& weights) {
  return total_loss(pred, target, weights, match(pred, target, weights));
}

LossGradients loss_gradients(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                             const LossWeights& weights, const Assignment& assignment) {
  weights.validate();
  check_capacity(pred, target);
  require(assignment.row_to_col.size() == target.size(), "assignment does not cover the target");
  check_assignment(pred, assignment);
  const std::size_t n = pred.size(), m = target.size();
  LossGradients g{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (n == 0) return g;
  const auto mask = matched_mask(n, assignment);
  const std::size_t unmatched = n - m;

  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = assignment.row_to_col[j];
    const double scale = 2.0 * weights.mu_recon / static_cast<double>(m);
    g.birth[i] += scale * (pred[i].birth - target[j].birth);
    g.death[i] += scale * (pred[i].death - target[j].death);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sigmoid(pred[i].logit);
    g.logit[i] = weights.mu_exist * (mask[i] ? s - 1.0 : s) / static_cast<double>(n);
    if (!mask[i]) {
      const double h = 2.0 * weights.mu_diag * (pred[i].death - pred[i].birth) / static_cast<double>(unmatched);
      g.death[i] += h;
      g.birth[i] -= h;
    }
  }
  return g;
}

LossGradients loss_gradients(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                             const LossWeights& weights) {
  return loss_gradients(pred, target, weights, match(pred, target, weights));
}

GradientCheck check_gradients(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                              const LossWeights& weights, double h) {
  require(h > 0.0, "finite-difference step must be positive");
  const auto assignment = match(pred, target, weights);
  const auto g = loss_gradients(pred, target, weights, assignment);
  auto f = [&](const PredictionSet& q) { return total_loss(q, target, weights, assignment).total; };
  GradientCheck r;
  PredictionSet work = pred;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (int coord = 0; coord < 3; ++coord) {
      auto field = [&](PredictionSet& q) -> double& {
        return coord == 0 ? q[i].birth : coord == 1 ? q[i].death : q[i].logit;
      };
      const double x = field(work);
      field(work) = x + h;
      const double up = f(work);
      field(work) = x - h;
      const double down = f(work);
      field(work) = x;
      const double fd = (up - down) / (2.0 * h);
      const double an = coord == 0 ? g.birth[i] : coord == 1 ? g.death[i] : g.logit[i];
      const double scale = std::max(std::abs(fd), std::abs(an));
      if (scale >= 1e-12) r.worst_relative_error = std::max(r.worst_relative_error, std::abs(fd - an) / scale);
      ++r.coordinates;
    }
  }
  return r;
}

PersistenceDiagram prediction_diagram(const PredictionSet& pred, double threshold) {
  PersistenceDiagram d;
  d.dim = 1;
  d.provenance.filtration = "predicted";
  for (const auto& p : pred) {
    if (sigmoid(p.logit) >= threshold) d.pairs.push_back({p.birth, p.death, false});
  }
  return d;
}

PersistenceDiagram prediction_diagram(const PredictionSet& pred) {
  PersistenceDiagram d;
  d.dim = 1;
  d.provenance.filtration = "predicted";
  for (const auto& p : pred) d.pairs.push_back({p.birth, p.death, false});
  return d;
}

void write_prediction_csv(const std::filesystem::path& path, const PredictionSet& pred) {
  auto out = open_output(path);
  out << "birth,death,logit\n";
  for (const auto& p : pred) {
    out << format_double(p.birth) << ',' << format_double(p.death) << ',' << format_double(p.logit) << '\n';
  }
  if (!out) fail(Errc::io_error, "failed writing '" + path.string() + "'");
}

PredictionSet read_prediction_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::io_error, "'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "birth,death,logit") fail(Errc::io_error, "'" + path.string() + "' lacks the birth,death,logit header");
  PredictionSet pred;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) fail(Errc::io_error, "'" + path.string() + "': expected 3 fields per row");
    pred.push_back({parse_double(f[0]), parse_double(f[1]), parse_double(f[2])});
  }
  return pred;
}

}  // namespace topo
