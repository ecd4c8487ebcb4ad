#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "topo/diagram_metrics.hpp"
#include "topo/persistence.hpp"
#include "topo/set_prediction.hpp"

namespace topo {

enum class NormPlacement { post, pre };
enum class CombineMode { last, combined };

CombineMode parse_combine_mode(const std::string& s);
NormPlacement parse_norm_placement(const std::string& s);

struct DecoderConfig {
  int num_queries = 250;
  int feature_dim = 384;  // encoder token width
  int model_dim = 256;
  int heads = 8;
  int layers = 6;
  int ffn_dim = 2048;
  int pos_hidden = 128;    // hidden width of the patch-centre MLP
  int head_hidden = 256;
  int pair_head_layers = 3;
  NormPlacement norm = NormPlacement::post;
  double norm_eps = 1e-5;

  void validate() const;
  friend bool operator==(const DecoderConfig&, const DecoderConfig&) = default;
};

nlohmann::json to_json(const DecoderConfig& config);
DecoderConfig decoder_config_from_json(const nlohmann::json& j);

struct WeightTensor {
  std::vector<std::size_t> shape;
  std::vector<float> values;
  std::size_t size() const;
};

struct WeightSet {
  DecoderConfig config;
  std::string source;
  std::map<std::string, WeightTensor> tensors;
};

/// Every tensor the decoder needs, with its exact shape, in export order.
/// Linear layers follow the (out, in) weight layout.
std::vector<std::pair<std::string, std::vector<std::size_t>>> weight_schema(const DecoderConfig& config);

/// Throws invalid_parameter on missing, unknown, mis-shaped or non-finite tensors.
void validate_weights(const WeightSet& weights);

/// Xavier-uniform linear weights, small uniform biases, norms near identity.
WeightSet random_weights(const DecoderConfig& config, std::uint64_t seed);
/// Zero everywhere except unit norm scales; query embeddings are kept random
/// from `seed` so the residual chain has something to carry.
WeightSet zero_weights(const DecoderConfig& config, std::uint64_t seed);

/// JSON manifest (format, version, config, payload file, tensor name/shape/
/// byte offset) plus a little-endian float32 payload next to it.
void write_weights(const std::filesystem::path& manifest, const WeightSet& weights);
WeightSet read_weights(const std::filesystem::path& manifest);

struct EncoderFeatures {
  std::vector<Eigen::MatrixXd> blocks;  // each n x feature_dim, first block first
  Eigen::MatrixXd centers;              // n x 3
};

/// Features from an FTN1 tensor of shape (12, n, d), (1, n, d) or (n, d); patch
/// centres from `centers`, or from the path recorded in the tensor metadata.
EncoderFeatures load_encoder_features(const std::filesystem::path& features,
                                      const std::optional<std::filesystem::path>& centers = std::nullopt);

Eigen::MatrixXd combine_blocks(const EncoderFeatures& features, CombineMode mode);

struct Tokens {
  Eigen::MatrixXd tokens;  // n x model_dim
  Eigen::MatrixXd pos;     // n x model_dim
};

struct DecodeStats {
  double max_softmax_row_error = 0.0;  // |sum of attention row - 1|, over every site
  std::size_t attention_rows = 0;
};

/// Immutable, converted copy of a weight set; safe for concurrent use.
class FiltrModel {
 public:
  explicit FiltrModel(const WeightSet& weights);

  const DecoderConfig& config() const { return config_; }

  Tokens adapt(const Eigen::MatrixXd& features, const Eigen::MatrixXd& centers) const;
  Eigen::MatrixXd decode(const Tokens& tokens, DecodeStats* stats = nullptr) const;
  PredictionSet heads(const Eigen::MatrixXd& states) const;
  PredictionSet predict(const EncoderFeatures& features, CombineMode mode, DecodeStats* stats = nullptr) const;

 private:
  struct Linear {
    Eigen::MatrixXd w;  // out x in
    Eigen::RowVectorXd b;
    Eigen::MatrixXd operator()(const Eigen::MatrixXd& x) const;
  };
  struct Norm {
    Eigen::RowVectorXd gamma, beta;
    double eps = 1e-5;
    Eigen::MatrixXd operator()(const Eigen::MatrixXd& x) const;
  };
  struct Attention {
    Linear q, k, v, out;
  };
  struct Layer {
    Attention self_attn, cross_attn;
    Linear ff1, ff2;
    Norm norm1, norm2, norm3;
  };

  Eigen::MatrixXd attend(const Attention& a, const Eigen::MatrixXd& query, const Eigen::MatrixXd& key,
                         const Eigen::MatrixXd& value, DecodeStats* stats) const;

  DecoderConfig config_;
  Eigen::MatrixXd query_embed_;
  Norm adapter_norm_;
  Linear adapter_proj_, pos_fc1_, pos_fc2_;
  std::vector<Layer> layers_;
  Norm final_norm_;
  std::vector<Linear> pair_head_;
  Linear exist_head_;
};

/// Full pipeline. With a threshold only pairs with sigmoid(logit) >= threshold
/// are kept; without one all N query outputs are returned.
PersistenceDiagram predict_diagram(const EncoderFeatures& features, const FiltrModel& model, CombineMode mode,
                                   std::optional<double> threshold = 0.5);

/// Runs predict_diagram over independent samples on `jobs` threads.
std::vector<PersistenceDiagram> predict_batch(std::span<const EncoderFeatures> samples, const FiltrModel& model,
                                              CombineMode mode, std::optional<double> threshold, unsigned jobs = 1);

struct EvaluationRow {
  std::string name;
  double w2 = 0.0;
  double bottleneck = 0.0;
  double pie = 0.0;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  double mean_w2 = 0.0;
  double mean_bottleneck = 0.0;
  double mean_pie = 0.0;
};

/// Per-sample W2, bottleneck and PIE, averaged arithmetically. Predictions are
/// expected to be thresholded already.
EvaluationReport evaluate(std::span<const PersistenceDiagram> predicted, std::span<const PersistenceDiagram> truth,
                          const ImageParams& params = {}, std::span<const std::string> names = {});

/// "name,w2,bottleneck,pie" rows followed by a "mean" row.
void write_evaluation_csv(const std::filesystem::path& path, const EvaluationReport& report);

}  // namespace topo
