#include "topo/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topo/error.hpp"
#include "topo/rng.hpp"

namespace topo {

namespace {

std::vector<PersistencePair> finite_pairs(const PersistenceDiagram& d) {
  std::vector<PersistencePair> out;
  for (const auto& p : d.pairs) {
    if (!p.essential && std::isfinite(p.death)) out.push_back(p);
  }
  return out;
}

}  // namespace

Eigen::VectorXd topk_vectorize(const PersistenceDiagram& diagram, std::size_t k) {
  require(k > 0, "top-k size must be positive");
  auto pairs = finite_pairs(diagram);
  std::stable_sort(pairs.begin(), pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
    if (a.persistence() != b.persistence()) return a.persistence() > b.persistence();
    return a.birth < b.birth;
  });
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * k);
  for (std::size_t i = 0; i < std::min(k, pairs.size()); ++i) {
    v[2 * i] = pairs[i].birth;
    v[2 * i + 1] = pairs[i].death;
  }
  return v;
}

Eigen::MatrixXd topk_vectorize(std::span<const PersistenceDiagram> diagrams, std::size_t k) {
  Eigen::MatrixXd m(diagrams.size(), 2 * k);
  for (std::size_t i = 0; i < diagrams.size(); ++i) m.row(i) = topk_vectorize(diagrams[i], k).transpose();
  return m;
}

QuantizationModel fit_quantization_centers(std::span<const PersistenceDiagram> diagrams,
                                           const QuantizationOptions& options) {
  std::size_t n = 0;
  for (const auto& d : diagrams) n += finite_pairs(d).size();
  Eigen::MatrixXd points(n, 2);
  std::size_t r = 0;
  for (const auto& d : diagrams) {
    for (const auto& p : finite_pairs(d)) {
      points(r, 0) = p.birth;
      points(r, 1) = p.death;
      ++r;
    }
  }
  return fit_quantization_centers(points, options);
}

QuantizationModel fit_quantization_centers(const Eigen::MatrixXd& points, const QuantizationOptions& options) {
  require(options.n_centers > 0, "number of centres must be positive");
  require(points.cols() == 2, "quantization expects (birth, death) rows");
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < options.n_centers) {
    fail(Errc::invalid_parameter, "need at least " + std::to_string(options.n_centers) +
                                      " finite pairs to fit centres, got " + std::to_string(n));
  }
  const std::size_t k = options.n_centers;
  Rng rng(derive_seed(options.seed, "kmeans++"));

  // k-means++ seeding
  Eigen::MatrixXd centers(k, 2);
  centers.row(0) = points.row(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
  Eigen::VectorXd nearest = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    const double total = nearest.sum();
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    } else {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        u -= nearest[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = points.row(pick);
    nearest = nearest.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<std::size_t> assign(n, 0);
  auto assign_all = [&] {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      changed |= assign[i] != best;
      assign[i] = best;
      inertia += bd;
    }
    return std::pair{changed, inertia};
  };

  QuantizationModel model;
  auto [changed, inertia] = assign_all();
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, 2);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(assign[i]) += points.row(i);
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c]) centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    }
    model.iterations = it + 1;
    std::tie(changed, inertia) = assign_all();
    if (!changed) break;
  }

  model.centers = centers;
  model.inertia = inertia;
  model.scales = Eigen::VectorXd::Zero(k);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    model.scales[assign[i]] += (points.row(i) - centers.row(assign[i])).norm();
    ++counts[assign[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    model.scales[c] = counts[c] ? model.scales[c] / static_cast<double>(counts[c]) : 0.0;
    model.scales[c] = std::max(model.scales[c], 1e-6);
  }
  return model;
}

Eigen::VectorXd quantized_vectorize(const PersistenceDiagram& diagram, const QuantizationModel& model) {
  const auto k = model.centers.rows();
  require(k > 0 && model.scales.size() == k, "quantization model is empty or inconsistent");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
  for (const auto& p : finite_pairs(diagram)) {
    const Eigen::RowVector2d q(p.birth, p.death);
    for (Eigen::Index c = 0; c < k; ++c) v[c] += std::exp(-(q - model.centers.row(c)).norm() / model.scales[c]);
  }
  return v;
}

Eigen::MatrixXd quantized_vectorize(std::span<const PersistenceDiagram> diagrams,
                                    const QuantizationModel& model) {
  Eigen::MatrixXd m(diagrams.size(), model.centers.rows());
  for (std::size_t i = 0; i < diagrams.size(); ++i) m.row(i) = quantized_vectorize(diagrams[i], model).transpose();
  return m;
}

nlohmann::json to_json(const QuantizationModel& model) {
  nlohmann::json centers = nlohmann::json::array();
  for (Eigen::Index c = 0; c < model.centers.rows(); ++c) {
    centers.push_back({model.centers(c, 0), model.centers(c, 1)});
  }
  std::vector<double> scales(model.scales.data(), model.scales.data() + model.scales.size());
  return {{"centers", centers}, {"scales", scales}, {"iterations", model.iterations}, {"inertia", model.inertia}};
}

QuantizationModel quantization_model_from_json(const nlohmann::json& j) {
  QuantizationModel m;
  const auto& centers = j.at("centers");
  const auto scales = j.at("scales").get<std::vector<double>>();
  require(centers.size() == scales.size(), "centre and scale counts differ");
  m.centers.resize(static_cast<Eigen::Index>(centers.size()), 2);
  m.scales.resize(static_cast<Eigen::Index>(scales.size()));
  for (std::size_t c = 0; c < centers.size(); ++c) {
    m.centers(c, 0) = centers[c].at(0).get<double>();
    m.centers(c, 1) = centers[c].at(1).get<double>();
    m.scales[c] = scales[c];
  }
  m.iterations = j.value("iterations", std::size_t{0});
  m.inertia = j.value("inertia", 0.0);
  return m;
}

}  // namespace topo
