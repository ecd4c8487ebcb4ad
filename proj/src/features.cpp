#include "topo/features.hpp"

#include <cmath>
#include <fstream>

#include "topo/error.hpp"
#include "topo/io.hpp"

namespace topo {

std::size_t FeatureTensor::size() const {
  std::size_t n = dims.empty() ? 0 : 1;
  for (auto d : dims) n *= d;
  return n;
}

Eigen::MatrixXd FeatureTensor::matrix() const {
  require(!dims.empty(), "feature tensor has no dimensions");
  require(data.size() == size(), "feature tensor payload does not match its dims");
  const std::size_t rows = dims[0];
  const std::size_t cols = rows ? data.size() / rows : 0;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = data[r * cols + c];
  }
  return m;
}

Eigen::MatrixXd FeatureTensor::slice(std::size_t index) const {
  require(dims.size() >= 2, "slicing needs a tensor of rank >= 2");
  require(index < dims[0], "slice index out of range");
  require(data.size() == size(), "feature tensor payload does not match its dims");
  const std::size_t rows = dims[1];
  const std::size_t per = data.size() / dims[0];
  const std::size_t cols = rows ? per / rows : 0;
  Eigen::MatrixXd m(rows, cols);
  const float* base = data.data() + index * per;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = base[r * cols + c];
  }
  return m;
}

FeatureTensor FeatureTensor::from_matrix(const Eigen::MatrixXd& m) {
  FeatureTensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(static_cast<float>(m(r, c)));
  }
  return t;
}

nlohmann::json to_json(const FeatureMetadata& meta) {
  nlohmann::json j = {{"encoder", meta.encoder},
                      {"block", meta.block},
                      {"pooling", meta.pooling},
                      {"point_count", meta.point_count},
                      {"extra", meta.extra}};
  if (!meta.centers.empty()) j["centers"] = meta.centers;
  return j;
}

FeatureMetadata feature_metadata_from_json(const nlohmann::json& j) {
  FeatureMetadata m;
  m.encoder = j.value("encoder", "");
  m.block = j.value("block", 0);
  m.pooling = j.value("pooling", "");
  m.point_count = j.value("point_count", std::size_t{0});
  m.centers = j.value("centers", "");
  if (j.contains("extra")) m.extra = j.at("extra");
  return m;
}

namespace {

std::filesystem::path sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

}  // namespace

void write_ftn(const std::filesystem::path& path, const FeatureTensor& tensor) {
  require(tensor.data.size() == tensor.size(), "feature tensor payload does not match its dims");
  {
    auto out = open_output(path, true);
    out.write("FTN1", 4);
    binary::put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
    for (auto d : tensor.dims) binary::put_u32(out, d);
    for (float v : tensor.data) binary::put_f32(out, v);
    if (!out) fail(Errc::io_error, "failed writing '" + path.string() + "'");
  }
  auto meta = open_output(sidecar(path));
  meta << to_json(tensor.meta).dump(1) << '\n';
}

FeatureTensor read_ftn(const std::filesystem::path& path) {
  auto in = open_input(path, true);
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "FTN1") {
    fail(Errc::io_error, "'" + path.string() + "' is not an FTN1 tensor");
  }
  FeatureTensor t;
  const auto rank = binary::get_u32(in);
  if (rank == 0 || rank > 8) fail(Errc::io_error, "'" + path.string() + "' has an unsupported rank");
  for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(binary::get_u32(in));
  const std::size_t n = t.size();
  const auto header = static_cast<std::uintmax_t>(8 + 4 * rank);
  if (std::filesystem::file_size(path) != header + 4 * static_cast<std::uintmax_t>(n)) {
    fail(Errc::io_error, "'" + path.string() + "' payload size does not match its dims");
  }
  t.data.resize(n);
  for (auto& v : t.data) {
    v = binary::get_f32(in);
    if (!std::isfinite(v)) fail(Errc::io_error, "'" + path.string() + "' contains non-finite values");
  }
  if (std::filesystem::exists(sidecar(path))) {
    auto meta = open_input(sidecar(path));
    try {
      t.meta = feature_metadata_from_json(nlohmann::json::parse(meta));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::io_error, "malformed metadata for '" + path.string() + "': " + e.what());
    }
  }
  return t;
}

}  // namespace topo
