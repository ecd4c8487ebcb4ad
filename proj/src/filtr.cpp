#include "topo/filtr.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "topo/error.hpp"
#include "topo/features.hpp"
#include "topo/io.hpp"

namespace topo {

namespace {

constexpr std::size_t kEncoderBlocks = 12;

Eigen::MatrixXd to_matrix(const WeightTensor& t) {
  Eigen::MatrixXd m(t.shape[0], t.shape.size() > 1 ? t.shape[1] : 1);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.values[r * m.cols() + c];
  }
  return m;
}

Eigen::RowVectorXd to_row(const WeightTensor& t) {
  Eigen::RowVectorXd v(t.values.size());
  for (std::size_t i = 0; i < t.values.size(); ++i) v[i] = t.values[i];
  return v;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_finite(const Eigen::MatrixXd& m, const std::string& where) {
  if (!m.allFinite()) fail(Errc::numeric_overflow, "non-finite values in " + where);
}

}  // namespace

Eigen::MatrixXd FiltrModel::Linear::operator()(const Eigen::MatrixXd& x) const {
  return (x * w.transpose()).rowwise() + b;
}

Eigen::MatrixXd FiltrModel::Norm::operator()(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    y.row(r) = ((x.row(r).array() - mean) / std::sqrt(var + eps)).matrix().cwiseProduct(gamma) + beta;
  }
  return y;
}

FiltrModel::FiltrModel(const WeightSet& weights) : config_(weights.config) {
  validate_weights(weights);
  const auto& t = weights.tensors;
  const auto d = config_.model_dim;
  auto linear = [&](const std::string& name) { return Linear{to_matrix(t.at(name + ".weight")), to_row(t.at(name + ".bias"))}; };
  auto norm = [&](const std::string& name) {
    return Norm{to_row(t.at(name + ".weight")), to_row(t.at(name + ".bias")), config_.norm_eps};
  };
  auto attention = [&](const std::string& name) {
    const Eigen::MatrixXd w = to_matrix(t.at(name + ".in_proj_weight"));
    const Eigen::RowVectorXd b = to_row(t.at(name + ".in_proj_bias"));
    Attention a;
    a.q = {w.middleRows(0, d), b.segment(0, d)};
    a.k = {w.middleRows(d, d), b.segment(d, d)};
    a.v = {w.middleRows(2 * d, d), b.segment(2 * d, d)};
    a.out = linear(name + ".out_proj");
    return a;
  };

  query_embed_ = to_matrix(t.at("query_embed"));
  adapter_norm_ = norm("adapter.norm");
  adapter_proj_ = linear("adapter.proj");
  pos_fc1_ = linear("pos_embed.fc1");
  pos_fc2_ = linear("pos_embed.fc2");
  for (int i = 0; i < config_.layers; ++i) {
    const std::string p = "decoder.layers." + std::to_string(i);
    layers_.push_back({attention(p + ".self_attn"), attention(p + ".cross_attn"), linear(p + ".linear1"),
                       linear(p + ".linear2"), norm(p + ".norm1"), norm(p + ".norm2"), norm(p + ".norm3")});
  }
  final_norm_ = norm("decoder.norm");
  for (int i = 0; i < config_.pair_head_layers; ++i) pair_head_.push_back(linear("pair_head.layers." + std::to_string(i)));
  exist_head_ = linear("exist_head");
}

Tokens FiltrModel::adapt(const Eigen::MatrixXd& features, const Eigen::MatrixXd& centers) const {
  if (features.cols() != config_.feature_dim) {
    fail(Errc::invalid_parameter, "encoder features have width " + std::to_string(features.cols()) + ", expected " +
                                      std::to_string(config_.feature_dim));
  }
  if (centers.cols() != 3 || centers.rows() != features.rows()) {
    fail(Errc::invalid_parameter, "patch centres must be an n x 3 matrix matching the feature rows");
  }
  require(features.rows() > 0, "no encoder tokens");
  Tokens out;
  out.tokens = adapter_proj_(adapter_norm_(features));
  out.pos = pos_fc2_(pos_fc1_(centers).unaryExpr(&gelu));
  check_finite(out.tokens, "the feature adapter");
  check_finite(out.pos, "the positional encoding");
  return out;
}

Eigen::MatrixXd FiltrModel::attend(const Attention& a, const Eigen::MatrixXd& query, const Eigen::MatrixXd& key,
                                   const Eigen::MatrixXd& value, DecodeStats* stats) const {
  const Eigen::MatrixXd q = a.q(query), k = a.k(key), v = a.v(value);
  const int dh = config_.model_dim / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Eigen::MatrixXd heads(query.rows(), config_.model_dim);
  for (int h = 0; h < config_.heads; ++h) {
    Eigen::MatrixXd s = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() * scale;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const double m = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - m).exp();
      s.row(r) /= s.row(r).sum();
    }
    if (stats) {
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        stats->max_softmax_row_error = std::max(stats->max_softmax_row_error, std::abs(s.row(r).sum() - 1.0));
      }
      stats->attention_rows += static_cast<std::size_t>(s.rows());
    }
    heads.middleCols(h * dh, dh) = s * v.middleCols(h * dh, dh);
  }
  return a.out(heads);
}

Eigen::MatrixXd FiltrModel::decode(const Tokens& tokens, DecodeStats* stats) const {
  require(tokens.tokens.cols() == config_.model_dim && tokens.pos.cols() == config_.model_dim &&
              tokens.tokens.rows() == tokens.pos.rows() && tokens.tokens.rows() > 0,
          "token and positional matrices must be n x model_dim");
  const Eigen::MatrixXd& memory = tokens.tokens;
  const Eigen::MatrixXd keys = memory + tokens.pos;
  auto ffn = [](const Layer& l, const Eigen::MatrixXd& x) { return l.ff2(l.ff1(x).cwiseMax(0.0)); };

  Eigen::MatrixXd x = query_embed_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (config_.norm == NormPlacement::post) {
      x = l.norm1(x + attend(l.self_attn, x, x, x, stats));
      x = l.norm2(x + attend(l.cross_attn, x, keys, memory, stats));
      x = l.norm3(x + ffn(l, x));
    } else {
      Eigen::MatrixXd t = l.norm1(x);
      x += attend(l.self_attn, t, t, t, stats);
      t = l.norm2(x);
      x += attend(l.cross_attn, t, keys, memory, stats);
      x += ffn(l, l.norm3(x));
    }
    check_finite(x, "decoder block " + std::to_string(i + 1));
  }
  return final_norm_(x);
}

PredictionSet FiltrModel::heads(const Eigen::MatrixXd& states) const {
  require(states.cols() == config_.model_dim, "decoder states have the wrong width");
  Eigen::MatrixXd h = states;
  for (std::size_t i = 0; i < pair_head_.size(); ++i) {
    h = pair_head_[i](h);
    if (i + 1 < pair_head_.size()) h = h.cwiseMax(0.0);
  }
  const Eigen::MatrixXd logit = exist_head_(states);
  check_finite(h, "the pair head");
  check_finite(logit, "the existence head");
  PredictionSet out(states.rows());
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    const double b = sigmoid(h(i, 0));
    double d = b + softplus(h(i, 1));
    // keep the ordering strict when softplus underflows below b's spacing
    if (!(d > b)) d = std::nextafter(b, std::numeric_limits<double>::infinity());
    out[i] = {b, d, logit(i, 0)};
  }
  return out;
}

PredictionSet FiltrModel::predict(const EncoderFeatures& features, CombineMode mode, DecodeStats* stats) const {
  return heads(decode(adapt(combine_blocks(features, mode), features.centers), stats));
}

Eigen::MatrixXd combine_blocks(const EncoderFeatures& features, CombineMode mode) {
  if (features.blocks.empty()) fail(Errc::invalid_parameter, "no encoder blocks given");
  for (const auto& b : features.blocks) {
    require(b.rows() == features.blocks[0].rows() && b.cols() == features.blocks[0].cols(),
            "encoder blocks differ in shape");
  }
  if (mode == CombineMode::last) return features.blocks.back();
  if (features.blocks.size() != kEncoderBlocks) {
    fail(Errc::invalid_parameter, "combined mode needs all " + std::to_string(kEncoderBlocks) + " encoder blocks, got " +
                                      std::to_string(features.blocks.size()));
  }
  Eigen::MatrixXd sum = features.blocks[0];
  for (std::size_t i = 1; i < features.blocks.size(); ++i) sum += features.blocks[i];
  return sum;
}

EncoderFeatures load_encoder_features(const std::filesystem::path& features,
                                      const std::optional<std::filesystem::path>& centers) {
  const auto t = read_ftn(features);
  EncoderFeatures out;
  if (t.dims.size() == 2) {
    out.blocks.push_back(t.matrix());
  } else if (t.dims.size() == 3 && (t.dims[0] == 1 || t.dims[0] == kEncoderBlocks)) {
    for (std::size_t b = 0; b < t.dims[0]; ++b) out.blocks.push_back(t.slice(b));
  } else {
    fail(Errc::invalid_parameter, "encoder features must have shape (n, d), (1, n, d) or (12, n, d)");
  }
  std::filesystem::path centre_path;
  if (centers) {
    centre_path = *centers;
  } else if (!t.meta.centers.empty()) {
    centre_path = features.parent_path() / t.meta.centers;
  } else {
    fail(Errc::invalid_parameter, "no patch centres given for '" + features.string() + "'");
  }
  out.centers = read_ftn(centre_path).matrix();
  if (out.centers.cols() != 3 || out.centers.rows() != out.blocks[0].rows()) {
    fail(Errc::invalid_parameter, "patch centres must have shape (n, 3) matching the features");
  }
  return out;
}

PersistenceDiagram predict_diagram(const EncoderFeatures& features, const FiltrModel& model, CombineMode mode,
                                   std::optional<double> threshold) {
  const auto pred = model.predict(features, mode);
  return threshold ? prediction_diagram(pred, *threshold) : prediction_diagram(pred);
}

std::vector<PersistenceDiagram> predict_batch(std::span<const EncoderFeatures> samples, const FiltrModel& model,
                                              CombineMode mode, std::optional<double> threshold, unsigned jobs) {
  std::vector<PersistenceDiagram> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < samples.size();) {
      try {
        out[i] = predict_diagram(samples[i], model, mode, threshold);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < std::max(jobs, 1u); ++t) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

EvaluationReport evaluate(std::span<const PersistenceDiagram> predicted, std::span<const PersistenceDiagram> truth,
                          const ImageParams& params, std::span<const std::string> names) {
  if (predicted.size() != truth.size()) {
    fail(Errc::invalid_parameter, "got " + std::to_string(predicted.size()) + " predicted and " +
                                      std::to_string(truth.size()) + " true diagrams");
  }
  require(names.empty() || names.size() == predicted.size(), "one name per sample expected");
  require(!predicted.empty(), "nothing to evaluate");
  EvaluationReport r;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    EvaluationRow row;
    row.name = names.empty() ? std::to_string(i) : names[i];
    row.w2 = wasserstein2(predicted[i], truth[i]);
    row.bottleneck = bottleneck(predicted[i], truth[i]);
    row.pie = pie(predicted[i], truth[i], params);
    r.mean_w2 += row.w2;
    r.mean_bottleneck += row.bottleneck;
    r.mean_pie += row.pie;
    r.rows.push_back(std::move(row));
  }
  const auto n = static_cast<double>(r.rows.size());
  r.mean_w2 /= n;
  r.mean_bottleneck /= n;
  r.mean_pie /= n;
  return r;
}

void write_evaluation_csv(const std::filesystem::path& path, const EvaluationReport& report) {
  auto out = open_output(path);
  out << "name,w2,bottleneck,pie\n";
  for (const auto& r : report.rows) {
    out << r.name << ',' << format_double(r.w2) << ',' << format_double(r.bottleneck) << ',' << format_double(r.pie)
        << '\n';
  }
  out << "mean," << format_double(report.mean_w2) << ',' << format_double(report.mean_bottleneck) << ','
      << format_double(report.mean_pie) << '\n';
  if (!out) fail(Errc::io_error, "failed writing '" + path.string() + "'");
}

}  // namespace topo
