#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "topo/donut.hpp"
#include "topo/error.hpp"
#include "topo/features.hpp"
#include "topo/persistence.hpp"
#include "topo/probe.hpp"
#include "topo/rng.hpp"
#include "topo/similarity.hpp"
#include "topo/vectorize.hpp"

using namespace topo;

namespace {

PersistenceDiagram random_diagram(Rng& rng, int n) {
  PersistenceDiagram d;
  d.dim = 1;
  for (int i = 0; i < n; ++i) {
    // coarse grid so persistence ties occur
    const double b = rng.uniform_int(0, 10) * 0.1;
    d.pairs.push_back({b, b + rng.uniform_int(1, 5) * 0.1, false});
  }
  return d;
}

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

// HSIC from explicit Gram matrices and the centring matrix, one entry at a time.
double naive_hsic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const int n = static_cast<int>(x.rows());
  std::vector<std::vector<double>> k(n, std::vector<double>(n)), l(n, std::vector<double>(n)),
      h(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double a = 0, b = 0;
      for (int c = 0; c < x.cols(); ++c) a += x(i, c) * x(j, c);
      for (int c = 0; c < y.cols(); ++c) b += y(i, c) * y(j, c);
      k[i][j] = a;
      l[i][j] = b;
      h[i][j] = (i == j ? 1.0 : 0.0) - 1.0 / n;
    }
  }
  auto mul = [n](const auto& p, const auto& q) {
    std::vector<std::vector<double>> r(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int t = 0; t < n; ++t) r[i][j] += p[i][t] * q[t][j];
    return r;
  };
  const auto khlh = mul(mul(mul(k, h), l), h);
  double tr = 0;
  for (int i = 0; i < n; ++i) tr += khlh[i][i];
  return tr / ((n - 1.0) * (n - 1.0));
}

// Sum of squared distances of the best 2-partition, by enumeration.
double exhaustive_two_means(const Eigen::MatrixXd& p) {
  const int n = static_cast<int>(p.rows());
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    double cost = 0;
    for (int side = 0; side < 2; ++side) {
      Eigen::RowVector2d mean(0, 0);
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (((mask >> i) & 1) == side) {
          mean += p.row(i);
          ++count;
        }
      }
      mean /= count;
      for (int i = 0; i < n; ++i) {
        if (((mask >> i) & 1) == side) cost += (p.row(i) - mean).squaredNorm();
      }
    }
    best = std::min(best, cost);
  }
  return best;
}

}  // namespace

TEST_CASE("topk_vectorize examples and selection oracle") {
  CHECK(topk_vectorize(PersistenceDiagram{}, 2) == Eigen::VectorXd::Zero(4));
  PersistenceDiagram d;
  d.pairs = {{0, 1, false}, {0, 0.2, false}};
  CHECK(topk_vectorize(d, 1) == Eigen::Vector2d(0, 1));
  CHECK_THROWS_AS(topk_vectorize(d, 0), Error);

  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto diagram = random_diagram(rng, static_cast<int>(rng.uniform_int(0, 20)));
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 25));
    const auto v = topk_vectorize(diagram, k);

    // oracle: repeatedly extract the best remaining pair
    auto rest = diagram.pairs;
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(2 * k);
    for (std::size_t i = 0; i < k && !rest.empty(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < rest.size(); ++j) {
        const double pj = rest[j].death - rest[j].birth, pb = rest[best].death - rest[best].birth;
        if (pj > pb || (pj == pb && rest[j].birth < rest[best].birth)) best = j;
      }
      expected[2 * i] = rest[best].birth;
      expected[2 * i + 1] = rest[best].death;
      rest.erase(rest.begin() + static_cast<long>(best));
    }
    REQUIRE(v == expected);

    std::vector<PersistencePair> shuffled = diagram.pairs;
    rng.shuffle(shuffled);
    PersistenceDiagram permuted = diagram;
    permuted.pairs = shuffled;
    CHECK(topk_vectorize(permuted, k) == v);
  }
}

TEST_CASE("quantization centres match exhaustive 2-means on separated clusters") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(4, 12));
    Eigen::MatrixXd p(n, 2);
    for (int i = 0; i < n; ++i) {
      const double cx = i % 2 ? 0.1 : 0.8, cy = i % 2 ? 0.3 : 1.4;
      p.row(i) << cx + rng.uniform(-0.05, 0.05), cy + rng.uniform(-0.05, 0.05);
    }
    QuantizationOptions options;
    options.n_centers = 2;
    options.seed = static_cast<std::uint64_t>(trial);
    const auto model = fit_quantization_centers(p, options);
    CHECK(model.inertia == doctest::Approx(exhaustive_two_means(p)).epsilon(1e-9));
    for (int c = 0; c < 2; ++c) {
      // within the bounding box of one cluster
      const Eigen::RowVector2d x = model.centers.row(c);
      const bool lower = std::abs(x[0] - 0.1) <= 0.05 && std::abs(x[1] - 0.3) <= 0.05;
      const bool upper = std::abs(x[0] - 0.8) <= 0.05 && std::abs(x[1] - 1.4) <= 0.05;
      CHECK((lower || upper));
    }
    CHECK((model.centers.row(0) - model.centers.row(1)).norm() > 0.5);
  }
}

TEST_CASE("quantized vectorization") {
  Rng rng(9);
  std::vector<PersistenceDiagram> diagrams;
  for (int i = 0; i < 5; ++i) diagrams.push_back(random_diagram(rng, 10));
  QuantizationOptions options;
  options.n_centers = 4;
  options.seed = 3;
  const auto a = fit_quantization_centers(diagrams, options);
  const auto b = fit_quantization_centers(diagrams, options);
  CHECK(a.centers == b.centers);
  CHECK(a.scales == b.scales);
  CHECK((a.scales.array() >= 1e-6).all());

  CHECK(quantized_vectorize(PersistenceDiagram{}, a) == Eigen::VectorXd::Zero(4));
  const auto v = quantized_vectorize(diagrams[0], a);
  for (int c = 0; c < 4; ++c) {
    double expected = 0;
    for (const auto& p : diagrams[0].pairs) {
      expected += std::exp(-std::hypot(p.birth - a.centers(c, 0), p.death - a.centers(c, 1)) / a.scales[c]);
    }
    CHECK(v[c] == doctest::Approx(expected).epsilon(1e-12));
  }

  const auto restored = quantization_model_from_json(to_json(a));
  CHECK(restored.centers.isApprox(a.centers, 1e-15));
  CHECK(restored.scales.isApprox(a.scales, 1e-15));

  options.n_centers = 51;
  CHECK_THROWS_AS(fit_quantization_centers(diagrams, options), Error);
}

TEST_CASE("linear_cka agrees with the naive HSIC ratio and its invariances") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_matrix(rng, 10, static_cast<int>(rng.uniform_int(1, 6)));
    const auto b = random_matrix(rng, 10, static_cast<int>(rng.uniform_int(1, 6)));
    const double oracle = naive_hsic(a, b) / std::sqrt(naive_hsic(a, a) * naive_hsic(b, b));
    const double cka = linear_cka(a, b);
    CHECK(cka == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(cka >= 0.0);
    CHECK(cka <= 1.0 + 1e-12);
    CHECK(linear_cka(b, a) == doctest::Approx(cka).epsilon(1e-12));
  }

  const auto a = random_matrix(rng, 40, 6);
  const Eigen::MatrixXd b = random_matrix(rng, 40, 3) + a.leftCols(3);
  CHECK(std::abs(linear_cka(a, a) - 1.0) < 1e-12);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, 6, 6));
  const Eigen::MatrixXd q = qr.householderQ();
  const double base = linear_cka(a, b);
  CHECK(std::abs(linear_cka(a * q, b) - base) < 1e-9);
  CHECK(std::abs(linear_cka(-3.5 * a, b) - base) < 1e-9);
  CHECK(std::abs(linear_cka(a, 1e-3 * b) - base) < 1e-9);
  // wide case exercises the sample-side Gram
  const auto w1 = random_matrix(rng, 5, 30), w2 = random_matrix(rng, 5, 12);
  CHECK(linear_cka(w1, w2) ==
        doctest::Approx(naive_hsic(w1, w2) / std::sqrt(naive_hsic(w1, w1) * naive_hsic(w2, w2))).epsilon(1e-10));

  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(10, 3, 2.0);
  try {
    linear_cka(constant, random_matrix(rng, 10, 2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::undefined_similarity);
  }
  CHECK_THROWS_AS(linear_cka(random_matrix(rng, 4, 2), random_matrix(rng, 5, 2)), Error);
  CHECK_THROWS_AS(linear_cka(random_matrix(rng, 2, 2), random_matrix(rng, 2, 2)), Error);
}

TEST_CASE("row permutation ablation") {
  Rng rng(4);
  const auto a = random_matrix(rng, 512, 64);

  const auto p = permute_rows(a, 0.5, 77);
  int moved = 0;
  for (int r = 0; r < 512; ++r) moved += !p.row(r).isApprox(a.row(r));
  CHECK(moved == 256);
  CHECK_THROWS_AS(permute_rows(a, 1.5, 1), Error);

  const Eigen::MatrixXd b = random_matrix(rng, 512, 16) + a.leftCols(16);
  CHECK(permutation_ablation(a, b, 0.0, 1).mean == doctest::Approx(linear_cka(a, b)).epsilon(1e-15));

  const double full = permutation_ablation(a, a, 1.0, 1).mean;
  MESSAGE("CKA after permuting all rows: " << full);
  CHECK(full < 0.2);

  const std::vector<double> alphas = {0.0, 0.1, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> mean(alphas.size(), 0.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t i = 0; i < alphas.size(); ++i) mean[i] += permutation_ablation(a, a, alphas[i], seed).mean / 10;
  }
  CHECK(std::abs(mean[0] - 1.0) < 1e-9);
  for (std::size_t i = 1; i < alphas.size(); ++i) CHECK(mean[i] <= mean[i - 1]);
}

TEST_CASE("linear probe: separable, chance level and monotone loss") {
  Rng rng(8);
  {
    const int n = 400;
    Eigen::MatrixXd x = random_matrix(rng, n, 6);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 2;
      x(i, 0) = (y[i] ? 1.0 : -1.0) * (0.5 + rng.uniform());
    }
    ProbeOptions options;
    options.seed = 1;
    const auto r = train_linear_probe(x, y, options);
    CHECK(r.fold_accuracy.size() == 5);
    CHECK(r.mean_accuracy >= 0.99);
    options.jobs = 3;
    const auto again = train_linear_probe(x, y, options);
    CHECK(again.fold_accuracy == r.fold_accuracy);

    rng.shuffle(y);
    const auto shuffled = train_linear_probe(x, y, options);
    MESSAGE("shuffled-label accuracy " << shuffled.mean_accuracy);
    CHECK(std::abs(shuffled.mean_accuracy - 0.5) <= 0.05);
  }
  {
    const int n = 1200;
    const auto x = random_matrix(rng, n, 8);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = 1 + i % 6;
    rng.shuffle(y);
    auto options = ProbeOptions::for_task("beta0");
    const auto r = train_linear_probe(x, y, options);
    CHECK(r.classes == 6);
    CHECK(std::abs(r.mean_accuracy - 1.0 / 6.0) <= 0.05);
    y[0] = 7;
    CHECK_THROWS_AS(train_linear_probe(x, y, options), Error);
  }
  for (int run = 0; run < 20; ++run) {
    const int n = 60, classes = static_cast<int>(rng.uniform_int(2, 4));
    const auto x = random_matrix(rng, n, 8);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = static_cast<int>(rng.uniform_int(0, classes - 1));
    std::vector<double> history;
    fit_softmax_regression(x, y, classes, 500, 0.1, &history);
    REQUIRE(history.size() == 501);
    for (std::size_t i = 1; i < history.size(); ++i) REQUIRE(history[i] <= history[i - 1] + 1e-12);
  }
}

TEST_CASE("probe skips folds with a single training class") {
  Rng rng(2);
  const auto x = random_matrix(rng, 10, 3);
  std::vector<int> y(10, 0);
  y[4] = 1;
  const auto r = train_linear_probe(x, y, ProbeOptions{});
  CHECK(r.fold_accuracy.size() == 4);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("skipped") != std::string::npos);
  CHECK_THROWS_AS(train_linear_probe(x, std::vector<int>(10, 0), ProbeOptions{}), Error);
  CHECK_THROWS_AS(train_linear_probe(random_matrix(rng, 8, 3), {0, 1, 0, 1, 0, 1, 0, 1}, ProbeOptions{}), Error);
}

TEST_CASE("FTN1 round trip and rejection of malformed files") {
  const auto dir = std::filesystem::temp_directory_path() / "topo_test_ftn";
  std::filesystem::remove_all(dir);
  FeatureTensor t;
  t.dims = {2, 3, 4};
  for (int i = 0; i < 24; ++i) t.data.push_back(0.25f * i - 1.0f);
  t.meta.encoder = "synthetic";
  t.meta.block = 7;
  t.meta.pooling = "cls";
  t.meta.point_count = 1024;
  write_ftn(dir / "f.ftn", t);
  CHECK(std::filesystem::exists(dir / "f.ftn.json"));
  const auto back = read_ftn(dir / "f.ftn");
  CHECK(back.dims == t.dims);
  CHECK(back.data == t.data);
  CHECK(back.meta.encoder == "synthetic");
  CHECK(back.meta.block == 7);
  CHECK(back.meta.pooling == "cls");
  CHECK(back.meta.point_count == 1024);
  CHECK(back.matrix().rows() == 2);
  CHECK(back.matrix().cols() == 12);
  CHECK(back.slice(1)(2, 3) == doctest::Approx(0.25 * 23 - 1.0));

  const auto m = FeatureTensor::from_matrix(back.matrix());
  CHECK(m.dims == std::vector<std::uint32_t>{2, 12});

  {
    std::ofstream out(dir / "bad.ftn", std::ios::binary);
    out << "FTN2";
  }
  CHECK_THROWS_AS(read_ftn(dir / "bad.ftn"), Error);
  std::filesystem::resize_file(dir / "f.ftn", std::filesystem::file_size(dir / "f.ftn") - 4);
  CHECK_THROWS_AS(read_ftn(dir / "f.ftn"), Error);
  CHECK_THROWS_AS(read_ftn(dir / "missing.ftn"), Error);
}

TEST_CASE("probe on H0 top-k of generated samples reads beta0 above chance") {
  GenerationConfig config;
  config.seed = 12;
  config.points_per_sample = 512;
  DatasetOptions options;
  options.keep_clouds = true;
  const auto data = generate_dataset(config, 60, options);
  std::vector<PersistenceDiagram> h0;
  std::vector<int> beta0;
  for (std::size_t i = 0; i < data.clouds.size(); ++i) {
    h0.push_back(rips_persistence(data.clouds[i], {}, std::array{0})[0]);
    beta0.push_back(data.manifest.samples[i].label.beta0);
  }
  const auto x = topk_vectorize(h0, 16);
  auto probe = ProbeOptions::for_task("beta0");
  probe.seed = 3;
  const auto r = train_linear_probe(x, beta0, probe);
  MESSAGE("beta0 probe accuracy " << r.mean_accuracy);
  CHECK(r.mean_accuracy > 1.0 / 6.0 + 0.1);
}
