#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "topo/diagram_metrics.hpp"
#include "topo/error.hpp"
#include "topo/rng.hpp"
#include "topo/set_prediction.hpp"

using namespace topo;

namespace {

PredictionSet random_prediction(Rng& rng, int n) {
  PredictionSet p;
  for (int i = 0; i < n; ++i) {
    const double b = rng.uniform(0.0, 1.0);
    p.push_back({b, b + rng.uniform(0.01, 0.5), rng.uniform(-3.0, 3.0)});
  }
  return p;
}

std::vector<PersistencePair> random_target(Rng& rng, int m) {
  std::vector<PersistencePair> t;
  for (int i = 0; i < m; ++i) {
    const double b = rng.uniform(0.0, 1.0);
    t.push_back({b, b + rng.uniform(0.01, 0.5), false});
  }
  return t;
}

double naive_bce(const PredictionSet& p, const std::vector<char>& matched) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = 1.0 / (1.0 + std::exp(-p[i].logit));
    s += matched[i] ? std::log(q) : std::log(1.0 - q);
  }
  return -s / p.size();
}

}  // namespace

TEST_CASE("match cost") {
  PredictionSet p{{0.1, 0.5, 40.0}};
  std::vector<PersistencePair> t{{0.1, 0.5, false}};
  CHECK(match_cost(p, t, {})(0, 0) < 1e-17);

  Rng rng(21);
  const auto pred = random_prediction(rng, 4);
  const auto target = random_target(rng, 3);
  LossWeights w;
  const auto c = match_cost(pred, target, w);
  REQUIRE(c.rows() == 3);
  REQUIRE(c.cols() == 4);
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 4; ++i) {
      const double sq = std::pow(pred[i].birth - target[j].birth, 2) + std::pow(pred[i].death - target[j].death, 2);
      CHECK(c(j, i) == doctest::Approx(w.lambda_reg * sq + w.lambda_exist * (1 - 1 / (1 + std::exp(-pred[i].logit)))));
    }
  }
  w.lambda_exist = 0.0;
  const auto pure = match_cost(pred, target, w);
  CHECK(pure(1, 2) == doctest::Approx(std::pow(pred[2].birth - target[1].birth, 2) + std::pow(pred[2].death - target[1].death, 2)));
  try {
    match_cost(random_prediction(rng, 2), random_target(rng, 3), {});
    FAIL("expected capacity error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::capacity_exceeded);
  }
}

TEST_CASE("individual losses") {
  PredictionSet p{{0.3, 0.9, 0.0}, {0.2, 0.7, 0.0}};
  std::vector<PersistencePair> t{{0.0, 0.5, false}};
  const Assignment a{{0}, 0.0};
  CHECK(loss_recon(p, t, a) == doctest::Approx(0.25));
  CHECK(loss_diag(p, a) == doctest::Approx(0.25));
  CHECK(loss_exist(p, a) == doctest::Approx(std::log(2.0)));

  PredictionSet saturated{{0.1, 0.5, 20.0}, {0.2, 0.2000001, -20.0}};
  CHECK(loss_exist(saturated, a) < 1e-8);
  CHECK(loss_recon(p, {}, Assignment{}) == 0.0);
  CHECK(loss_diag(PredictionSet{{0.1, 0.5, 1.0}}, Assignment{{0}, 0}) == 0.0);

  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pred = random_prediction(rng, 8);
    const auto target = random_target(rng, 5);
    const auto r = total_loss(pred, target, {});
    const auto mask = matched_mask(8, r.assignment);
    CHECK(r.exist == doctest::Approx(naive_bce(pred, mask)).epsilon(1e-12));
    double recon = 0, diag = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      const auto& q = pred[r.assignment.row_to_col[j]];
      recon += std::pow(q.birth - target[j].birth, 2) + std::pow(q.death - target[j].death, 2);
    }
    for (std::size_t i = 0; i < 8; ++i) diag += mask[i] ? 0.0 : std::pow(pred[i].death - pred[i].birth, 2);
    CHECK(r.recon == doctest::Approx(recon / 5).epsilon(1e-12));
    CHECK(r.diag == doctest::Approx(diag / 3).epsilon(1e-12));
    CHECK(r.total == doctest::Approx(r.recon + 0.1 * r.exist + 0.1 * r.diag).epsilon(1e-12));
    CHECK(r.recon >= 0);
    CHECK(r.exist >= 0);
    CHECK(r.diag >= 0);
  }
}

TEST_CASE("total loss special cases") {
  PredictionSet p{{0.1, 0.5, 30.0}, {0.3, 0.3 + 1e-9, -30.0}};
  std::vector<PersistencePair> t{{0.1, 0.5, false}};
  CHECK(total_loss(p, t).total < 1e-12);

  Rng rng(23);
  const auto pred = random_prediction(rng, 10);
  const auto target = random_target(rng, 4);
  LossWeights recon_only;
  recon_only.mu_exist = recon_only.mu_diag = 0.0;
  const auto r = total_loss(pred, target, recon_only);
  CHECK(r.total == r.recon);

  const auto empty = total_loss(pred, {}, {});
  CHECK(empty.recon == 0.0);
  CHECK(empty.total == doctest::Approx(0.1 * empty.exist + 0.1 * empty.diag));
}

TEST_CASE("total loss is invariant under permutations") {
  Rng rng(24);
  for (int trial = 0; trial < 30; ++trial) {
    auto pred = random_prediction(rng, 9);
    auto target = random_target(rng, 6);
    const double base = total_loss(pred, target).total;
    rng.shuffle(pred);
    rng.shuffle(target);
    CHECK(total_loss(pred, target).total == doctest::Approx(base).epsilon(1e-13));
  }
}

TEST_CASE("gradients match central differences") {
  Rng rng(25);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 12));
    const int m = static_cast<int>(rng.uniform_int(0, n));
    const auto pred = random_prediction(rng, n);
    const auto target = random_target(rng, m);
    LossWeights w;
    if (trial % 2) {
      w = {rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
    }
    const auto a = match(pred, target, w);
    const auto g = loss_gradients(pred, target, w, a);
    auto f = [&](const PredictionSet& q) { return total_loss(q, target, w, a).total; };
    for (int i = 0; i < n; ++i) {
      for (int coord = 0; coord < 3; ++coord) {
        auto plus = pred, minus = pred;
        double* pp = coord == 0 ? &plus[i].birth : coord == 1 ? &plus[i].death : &plus[i].logit;
        double* pm = coord == 0 ? &minus[i].birth : coord == 1 ? &minus[i].death : &minus[i].logit;
        *pp += h;
        *pm -= h;
        const double fd = (f(plus) - f(minus)) / (2 * h);
        const double an = coord == 0 ? g.birth[i] : coord == 1 ? g.death[i] : g.logit[i];
        const double scale = std::max(std::abs(fd), std::abs(an));
        const double rel = scale < 1e-12 ? 0.0 : std::abs(fd - an) / scale;
        worst = std::max(worst, rel);
        CHECK(rel < 1e-4);
      }
    }
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("gradient properties") {
  PredictionSet p{{0.1, 0.5, 35.0}, {0.3, 0.3, -35.0}};
  std::vector<PersistencePair> t{{0.1, 0.5, false}};
  const auto g = loss_gradients(p, t);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(g.birth[i]) + std::abs(g.death[i]) + std::abs(g.logit[i]) < 1e-12);

  Rng rng(26);
  const auto pred = random_prediction(rng, 7);
  const auto target = random_target(rng, 4);
  LossWeights w1, w2;
  w2.mu_recon = 2.0;
  w1.mu_diag = w2.mu_diag = 0.0;
  const auto a = match(pred, target, w1);
  const auto g1 = loss_gradients(pred, target, w1, a), g2 = loss_gradients(pred, target, w2, a);
  for (int i = 0; i < 7; ++i) {
    CHECK(g2.birth[i] == 2 * g1.birth[i]);
    CHECK(g2.death[i] == 2 * g1.death[i]);
  }
}

TEST_CASE("unmatched diagonal pairs do not affect W2") {
  Rng rng(27);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pred = random_prediction(rng, 12);
    const auto target = random_target(rng, 5);
    const auto a = match(pred, target, {});
    const auto mask = matched_mask(pred.size(), a);
    auto moved = pred;
    PersistenceDiagram matched_only;
    double moved_sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (mask[i]) {
        matched_only.pairs.push_back({pred[i].birth, pred[i].death, false});
        continue;
      }
      const double mid = 0.5 * (pred[i].birth + pred[i].death);
      moved_sq += 0.5 * std::pow(pred[i].death - pred[i].birth, 2);
      moved[i].birth = moved[i].death = mid;
    }
    PersistenceDiagram truth;
    truth.pairs = target;
    const double before = wasserstein2(prediction_diagram(pred), truth);
    const double after = wasserstein2(prediction_diagram(moved), truth);
    CHECK(std::abs(before - after) <= std::sqrt(moved_sq) + 1e-12);
    CHECK(after == wasserstein2(matched_only, truth));
  }
}

TEST_CASE("prediction CSV and thresholding") {
  Rng rng(28);
  const auto pred = random_prediction(rng, 6);
  const auto path = std::filesystem::temp_directory_path() / "topo_test_pred.csv";
  write_prediction_csv(path, pred);
  const auto back = read_prediction_csv(path);
  REQUIRE(back.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(back[i].birth == pred[i].birth);
    CHECK(back[i].logit == pred[i].logit);
  }
  std::filesystem::remove(path);
  CHECK(prediction_diagram(pred).size() == 6);
  CHECK(prediction_diagram(pred, std::nextafter(1.0, 2.0)).empty());
  std::size_t above = 0;
  for (const auto& p : pred) above += sigmoid(p.logit) >= 0.5;
  CHECK(prediction_diagram(pred, 0.5).size() == above);
}

TEST_CASE("check_gradients reports the worst coordinate") {
  Rng rng(90);
  const auto pred = random_prediction(rng, 8);
  const auto target = random_target(rng, 5);
  const auto r = check_gradients(pred, target);
  CHECK(r.coordinates == 24);
  CHECK(r.worst_relative_error < 1e-4);
  CHECK_THROWS_AS(check_gradients(pred, target, {}, 0.0), Error);
}
