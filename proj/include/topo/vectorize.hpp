#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "topo/persistence.hpp"

namespace topo {

/// Finite pairs sorted by persistence (desc, ties by birth), flattened as
/// (b0,d0,b1,d1,...) and zero padded to 2k entries.
Eigen::VectorXd topk_vectorize(const PersistenceDiagram& diagram, std::size_t k);
Eigen::MatrixXd topk_vectorize(std::span<const PersistenceDiagram> diagrams, std::size_t k);

struct QuantizationModel {
  Eigen::MatrixXd centers;  // n_centers x 2, (birth, death)
  Eigen::VectorXd scales;   // per-centre bandwidth
  std::size_t iterations = 0;
  double inertia = 0.0;     // sum of squared distances to the nearest centre
};

struct QuantizationOptions {
  std::size_t n_centers = 16;
  std::size_t max_iterations = 100;
  std::uint64_t seed = 0;
};

/// k-means++ seeding followed by Lloyd iterations over the pooled finite
/// pairs of `diagrams`. Bandwidth of a centre is the mean distance of its
/// assigned points.
QuantizationModel fit_quantization_centers(std::span<const PersistenceDiagram> diagrams,
                                           const QuantizationOptions& options);
QuantizationModel fit_quantization_centers(const Eigen::MatrixXd& points,
                                           const QuantizationOptions& options);

/// feature_j = sum_p exp(-|p - c_j| / s_j)
Eigen::VectorXd quantized_vectorize(const PersistenceDiagram& diagram, const QuantizationModel& model);
Eigen::MatrixXd quantized_vectorize(std::span<const PersistenceDiagram> diagrams,
                                    const QuantizationModel& model);

nlohmann::json to_json(const QuantizationModel& model);
QuantizationModel quantization_model_from_json(const nlohmann::json& j);

}  // namespace topo
