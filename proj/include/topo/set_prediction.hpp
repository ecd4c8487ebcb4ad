#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "topo/assignment.hpp"
#include "topo/persistence.hpp"

namespace topo {

struct PredictedPair {
  double birth = 0.0;
  double death = 0.0;
  double logit = 0.0;  // existence logit
};

using PredictionSet = std::vector<PredictedPair>;

struct LossWeights {
  double mu_recon = 1.0;
  double mu_exist = 0.1;
  double mu_diag = 0.1;
  double lambda_reg = 1.0;
  double lambda_exist = 0.1;

  void validate() const;
};

double sigmoid(double x);
/// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

/// M x N matrix; rows are targets, columns predictions:
/// cost(j, i) = lambda_reg * |pred_i - target_j|^2 + lambda_exist * (1 - sigmoid(logit_i)).
Eigen::MatrixXd match_cost(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                           const LossWeights& weights);

/// Optimal target -> prediction assignment (row_to_col indexes predictions).
Assignment match(const PredictionSet& pred, const std::vector<PersistencePair>& target, const LossWeights& weights);

/// Mask over predictions: 1 where the prediction is matched to a target.
std::vector<char> matched_mask(std::size_t n_pred, const Assignment& assignment);

double loss_recon(const PredictionSet& pred, const std::vector<PersistencePair>& target, const Assignment& assignment);
double loss_exist(const PredictionSet& pred, const Assignment& assignment);
double loss_diag(const PredictionSet& pred, const Assignment& assignment);

struct LossBreakdown {
  double total = 0.0;
  double recon = 0.0;
  double exist = 0.0;
  double diag = 0.0;
  Assignment assignment;
};

LossBreakdown total_loss(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                         const LossWeights& weights = {});
/// Same, with the assignment supplied instead of recomputed.
LossBreakdown total_loss(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                         const LossWeights& weights, const Assignment& assignment);

struct LossGradients {
  std::vector<double> birth, death, logit;
};

/// Partial derivatives of the total loss with the assignment held fixed.
LossGradients loss_gradients(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                             const LossWeights& weights, const Assignment& assignment);
LossGradients loss_gradients(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                             const LossWeights& weights = {});

struct GradientCheck {
  double worst_relative_error = 0.0;  // max over coordinates of |fd - analytic| / max(|fd|, |analytic|)
  std::size_t coordinates = 0;
};

/// Central differences of total_loss (assignment held at the optimum of
/// `pred`) against loss_gradients.
GradientCheck check_gradients(const PredictionSet& pred, const std::vector<PersistencePair>& target,
                              const LossWeights& weights = {}, double h = 1e-5);

/// Predictions with sigmoid(logit) >= threshold as a diagram.
PersistenceDiagram prediction_diagram(const PredictionSet& pred, double threshold);
/// Every prediction as a diagram pair, regardless of existence.
PersistenceDiagram prediction_diagram(const PredictionSet& pred);

/// CSV with header "birth,death,logit".
void write_prediction_csv(const std::filesystem::path& path, const PredictionSet& pred);
PredictionSet read_prediction_csv(const std::filesystem::path& path);

}  // namespace topo
