#include <cmath>
#include <fstream>
#include <set>

#include "topo/error.hpp"
#include "topo/filtr.hpp"
#include "topo/io.hpp"
#include "topo/rng.hpp"

namespace topo {

namespace {

constexpr const char* kWeightsFormat = "filtr-weights";
constexpr int kWeightsVersion = 1;

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + ")";
}

bool is_norm(const std::string& name) { return name.find("norm") != std::string::npos; }

}  // namespace

CombineMode parse_combine_mode(const std::string& s) {
  if (s == "last") return CombineMode::last;
  if (s == "combined") return CombineMode::combined;
  fail(Errc::invalid_parameter, "unknown block mode '" + s + "' (expected last or combined)");
}

NormPlacement parse_norm_placement(const std::string& s) {
  if (s == "post") return NormPlacement::post;
  if (s == "pre") return NormPlacement::pre;
  fail(Errc::invalid_parameter, "unknown norm placement '" + s + "' (expected post or pre)");
}

void DecoderConfig::validate() const {
  require(num_queries > 0, "num_queries must be positive");
  require(feature_dim > 0 && model_dim > 0 && ffn_dim > 0 && pos_hidden > 0 && head_hidden > 0,
          "layer widths must be positive");
  require(heads > 0 && model_dim % heads == 0, "model_dim must be divisible by the head count");
  require(layers > 0, "decoder needs at least one block");
  require(pair_head_layers >= 1, "pair head needs at least one layer");
  require(norm_eps > 0.0, "norm epsilon must be positive");
}

nlohmann::json to_json(const DecoderConfig& c) {
  return {{"num_queries", c.num_queries},
          {"feature_dim", c.feature_dim},
          {"model_dim", c.model_dim},
          {"heads", c.heads},
          {"layers", c.layers},
          {"ffn_dim", c.ffn_dim},
          {"pos_hidden", c.pos_hidden},
          {"head_hidden", c.head_hidden},
          {"pair_head_layers", c.pair_head_layers},
          {"norm", c.norm == NormPlacement::post ? "post" : "pre"},
          {"norm_eps", c.norm_eps}};
}

DecoderConfig decoder_config_from_json(const nlohmann::json& j) {
  DecoderConfig c;
  c.num_queries = j.value("num_queries", c.num_queries);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.model_dim = j.value("model_dim", c.model_dim);
  c.heads = j.value("heads", c.heads);
  c.layers = j.value("layers", c.layers);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.pos_hidden = j.value("pos_hidden", c.pos_hidden);
  c.head_hidden = j.value("head_hidden", c.head_hidden);
  c.pair_head_layers = j.value("pair_head_layers", c.pair_head_layers);
  c.norm = parse_norm_placement(j.value("norm", std::string("post")));
  c.norm_eps = j.value("norm_eps", c.norm_eps);
  c.validate();
  return c;
}

std::size_t WeightTensor::size() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> weight_schema(const DecoderConfig& c) {
  c.validate();
  using Shape = std::vector<std::size_t>;
  const auto n = static_cast<std::size_t>(c.num_queries), f = static_cast<std::size_t>(c.feature_dim),
             d = static_cast<std::size_t>(c.model_dim), ff = static_cast<std::size_t>(c.ffn_dim),
             ph = static_cast<std::size_t>(c.pos_hidden), hh = static_cast<std::size_t>(c.head_hidden);
  std::vector<std::pair<std::string, Shape>> s;
  auto linear = [&](const std::string& name, std::size_t out, std::size_t in) {
    s.emplace_back(name + ".weight", Shape{out, in});
    s.emplace_back(name + ".bias", Shape{out});
  };
  auto norm = [&](const std::string& name, std::size_t width) {
    s.emplace_back(name + ".weight", Shape{width});
    s.emplace_back(name + ".bias", Shape{width});
  };
  auto attention = [&](const std::string& name) {
    s.emplace_back(name + ".in_proj_weight", Shape{3 * d, d});
    s.emplace_back(name + ".in_proj_bias", Shape{3 * d});
    linear(name + ".out_proj", d, d);
  };

  s.emplace_back("query_embed", Shape{n, d});
  norm("adapter.norm", f);
  linear("adapter.proj", d, f);
  linear("pos_embed.fc1", ph, 3);
  linear("pos_embed.fc2", d, ph);
  for (int i = 0; i < c.layers; ++i) {
    const std::string p = "decoder.layers." + std::to_string(i);
    attention(p + ".self_attn");
    attention(p + ".cross_attn");
    linear(p + ".linear1", ff, d);
    linear(p + ".linear2", d, ff);
    norm(p + ".norm1", d);
    norm(p + ".norm2", d);
    norm(p + ".norm3", d);
  }
  norm("decoder.norm", d);
  std::size_t in = d;
  for (int i = 0; i < c.pair_head_layers; ++i) {
    const std::size_t out = i + 1 == c.pair_head_layers ? 2 : hh;
    linear("pair_head.layers." + std::to_string(i), out, in);
    in = out;
  }
  linear("exist_head", 1, d);
  return s;
}

void validate_weights(const WeightSet& w) {
  const auto schema = weight_schema(w.config);
  std::set<std::string> expected;
  for (const auto& [name, shape] : schema) {
    expected.insert(name);
    auto it = w.tensors.find(name);
    if (it == w.tensors.end()) fail(Errc::invalid_parameter, "weights are missing tensor '" + name + "'");
    if (it->second.shape != shape) {
      fail(Errc::invalid_parameter, "tensor '" + name + "' has shape " + shape_string(it->second.shape) +
                                        ", expected " + shape_string(shape));
    }
    if (it->second.values.size() != it->second.size()) {
      fail(Errc::invalid_parameter, "tensor '" + name + "' has the wrong number of values");
    }
    for (float v : it->second.values) {
      if (!std::isfinite(v)) fail(Errc::invalid_parameter, "tensor '" + name + "' contains non-finite values");
    }
  }
  for (const auto& [name, t] : w.tensors) {
    if (!expected.count(name)) fail(Errc::invalid_parameter, "unexpected tensor '" + name + "' in weights");
  }
}

WeightSet random_weights(const DecoderConfig& config, std::uint64_t seed) {
  WeightSet w;
  w.config = config;
  w.source = "random (seed " + std::to_string(seed) + ")";
  for (const auto& [name, shape] : weight_schema(config)) {
    WeightTensor t{shape, {}};
    t.values.resize(t.size());
    Rng rng(derive_seed(seed, name));
    if (name == "query_embed") {
      for (auto& v : t.values) v = static_cast<float>(rng.normal());
    } else if (is_norm(name)) {
      const double centre = name.ends_with(".weight") ? 1.0 : 0.0;
      for (auto& v : t.values) v = static_cast<float>(centre + rng.uniform(-0.1, 0.1));
    } else if (shape.size() == 2) {
      const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (auto& v : t.values) v = static_cast<float>(rng.uniform(-bound, bound));
    } else {
      for (auto& v : t.values) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    }
    w.tensors.emplace(name, std::move(t));
  }
  return w;
}

WeightSet zero_weights(const DecoderConfig& config, std::uint64_t seed) {
  WeightSet w = random_weights(config, seed);
  w.source = "zero (queries from seed " + std::to_string(seed) + ")";
  for (auto& [name, t] : w.tensors) {
    if (name == "query_embed") continue;
    const float fill = is_norm(name) && name.ends_with(".weight") ? 1.0f : 0.0f;
    std::fill(t.values.begin(), t.values.end(), fill);
  }
  return w;
}

void write_weights(const std::filesystem::path& manifest, const WeightSet& weights) {
  validate_weights(weights);
  auto payload = manifest;
  payload.replace_extension(".bin");
  nlohmann::json tensors = nlohmann::json::array();
  {
    auto out = open_output(payload, true);
    std::size_t offset = 0;
    for (const auto& [name, shape] : weight_schema(weights.config)) {
      const auto& t = weights.tensors.at(name);
      tensors.push_back({{"name", name}, {"shape", shape}, {"offset", offset}});
      for (float v : t.values) binary::put_f32(out, v);
      offset += 4 * t.values.size();
    }
    if (!out) fail(Errc::io_error, "failed writing '" + payload.string() + "'");
  }
  nlohmann::json j = {{"format", kWeightsFormat},
                      {"format_version", kWeightsVersion},
                      {"source", weights.source},
                      {"dtype", "float32-le"},
                      {"config", to_json(weights.config)},
                      {"payload", payload.filename().string()},
                      {"tensors", tensors}};
  auto out = open_output(manifest);
  out << j.dump(1) << '\n';
}

WeightSet read_weights(const std::filesystem::path& manifest) {
  nlohmann::json j;
  {
    auto in = open_input(manifest);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::io_error, "malformed weight manifest '" + manifest.string() + "': " + e.what());
    }
  }
  WeightSet w;
  try {
    if (j.at("format") != kWeightsFormat) fail(Errc::io_error, "'" + manifest.string() + "' is not a weight manifest");
    if (j.at("format_version") != kWeightsVersion) {
      fail(Errc::io_error, "unsupported weight manifest version in '" + manifest.string() + "'");
    }
    w.config = decoder_config_from_json(j.at("config"));
    w.source = j.value("source", "");
    const auto payload = manifest.parent_path() / j.at("payload").get<std::string>();
    const auto payload_size = std::filesystem::exists(payload) ? std::filesystem::file_size(payload) : 0;
    auto in = open_input(payload, true);
    for (const auto& entry : j.at("tensors")) {
      WeightTensor t;
      const auto name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto offset = entry.at("offset").get<std::size_t>();
      if (offset % 4 != 0 || offset + 4 * t.size() > payload_size) {
        fail(Errc::io_error, "tensor '" + name + "' lies outside the payload");
      }
      in.seekg(static_cast<std::streamoff>(offset));
      t.values.resize(t.size());
      for (auto& v : t.values) v = binary::get_f32(in);
      if (!w.tensors.emplace(name, std::move(t)).second) {
        fail(Errc::io_error, "tensor '" + name + "' is listed twice");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io_error, "malformed weight manifest '" + manifest.string() + "': " + e.what());
  }
  validate_weights(w);
  return w;
}

}  // namespace topo
