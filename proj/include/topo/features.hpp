#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace topo {

struct FeatureMetadata {
  std::string encoder;    // free-form id of the producing encoder
  int block = 0;          // 1-based transformer block, 0 when not applicable
  std::string pooling;    // cls | max | none
  std::size_t point_count = 0;
  std::string centers;    // optional path (relative to the tensor) of patch centres
  nlohmann::json extra = nlohmann::json::object();
};

/// Dense float32 tensor in row-major order.
struct FeatureTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
  FeatureMetadata meta;

  std::size_t size() const;
  /// First dimension as rows, remaining dimensions flattened into columns.
  Eigen::MatrixXd matrix() const;
  /// Slice along the first dimension as a (dims[1] x rest) matrix; needs rank >= 2.
  Eigen::MatrixXd slice(std::size_t index) const;
  static FeatureTensor from_matrix(const Eigen::MatrixXd& m);
};

/// "FTN1" magic, u32 rank, rank x u32 dims, then float32 payload; metadata
/// goes to a JSON side-car at `<path>.json`.
void write_ftn(const std::filesystem::path& path, const FeatureTensor& tensor);
FeatureTensor read_ftn(const std::filesystem::path& path);

nlohmann::json to_json(const FeatureMetadata& meta);
FeatureMetadata feature_metadata_from_json(const nlohmann::json& j);

}  // namespace topo
