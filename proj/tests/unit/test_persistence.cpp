#include <doctest.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>

#include "topo/error.hpp"
#include "topo/persistence.hpp"
#include "topo/rng.hpp"
#include "topo/union_find.hpp"
#include "common/persistence_oracle.hpp"

using namespace topo;
using topo::oracle::oracle_diagram;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double spread = 1.0) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.points.emplace_back(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread));
  }
  return c;
}

std::size_t alive_at(const PersistenceDiagram& d, double eps) {
  std::size_t n = 0;
  for (const auto& p : d.pairs) n += p.birth <= eps && (p.essential || p.death > eps);
  return n;
}

}  // namespace

TEST_CASE("rips_filtration small examples") {
  PointCloud two{{Vec3(0, 0, 0), Vec3(1, 0, 0)}};
  auto f = rips_filtration(two, 2.0);
  REQUIRE(f.simplices.size() == 3);
  CHECK(f.simplices[2].dim == 1);
  CHECK(f.simplices[2].value == 1.0);

  PointCloud tri{{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, std::sqrt(3.0) / 2, 0)}};
  f = rips_filtration(tri, 2.0);
  CHECK(f.simplices.back().dim == 2);
  CHECK(f.simplices.back().value == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(4);
  const auto cloud = random_cloud(rng, 10);
  const double max_edge = 1.2;
  f = rips_filtration(cloud, max_edge);
  std::size_t edges = 0, triangles = 0;
  auto dd = [&](int i, int j) { return (cloud.points[i] - cloud.points[j]).norm(); };
  for (int i = 0; i < 10; ++i) {
    for (int j = i + 1; j < 10; ++j) {
      edges += dd(i, j) <= max_edge;
      for (int k = j + 1; k < 10; ++k) triangles += dd(i, j) <= max_edge && dd(i, k) <= max_edge && dd(j, k) <= max_edge;
    }
  }
  std::size_t got_e = 0, got_t = 0;
  for (const auto& s : f.simplices) {
    got_e += s.dim == 1;
    got_t += s.dim == 2;
  }
  CHECK(got_e == edges);
  CHECK(got_t == triangles);
  for (std::size_t i = 1; i < f.simplices.size(); ++i) CHECK(f.simplices[i - 1].value <= f.simplices[i].value);

  CHECK_THROWS_AS(rips_filtration(PointCloud{}, 1.0), Error);
  PointCloud big;
  big.points.assign(2049, Vec3::Zero());
  try {
    rips_filtration(big, 1.0);
    FAIL("expected size limit");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::size_limit);
  }
}

TEST_CASE("reduction equals the rank oracle on tiny clouds") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 8));
    const auto cloud = random_cloud(rng, n);
    const double max_edge = trial % 3 == 0 ? rng.uniform(0.4, 1.5) : 4.0;
    const auto f = rips_filtration(cloud, max_edge);
    const auto implicit = rips_persistence(cloud, {max_edge});
    for (int q = 0; q <= 1; ++q) {
      const auto expected = oracle_diagram(f, q);
      CHECK(compute_persistence(f, q).pairs == expected);
      CHECK(implicit[q].pairs == expected);
    }
  }
}

TEST_CASE("explicit and implicit engines agree on larger clouds") {
  Rng rng(9);
  for (int trial = 0; trial < 12; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(20, 70));
    const auto cloud = random_cloud(rng, n);
    const double max_edge = trial % 2 ? 0.8 : 4.0;
    const auto f = rips_filtration(cloud, max_edge);
    const auto implicit = rips_persistence(cloud, {max_edge});
    CHECK(compute_persistence(f, 0).pairs == implicit[0].pairs);
    CHECK(compute_persistence(f, 1).pairs == implicit[1].pairs);
  }
}

TEST_CASE("degenerate inputs") {
  PointCloud one{{Vec3(0.3, 0.1, 0)}};
  const auto d = rips_persistence(one, {});
  REQUIRE(d[0].size() == 1);
  CHECK(d[0].pairs[0].essential);
  CHECK(d[1].empty());

  PointCloud clusters;
  for (int i = 0; i < 5; ++i) {
    clusters.points.emplace_back(0.01 * i, 0, 0);
    clusters.points.emplace_back(5 + 0.01 * i, 0, 0);
  }
  const auto h0 = rips_persistence(clusters, {1.0}, std::array{0})[0];
  CHECK(std::count_if(h0.pairs.begin(), h0.pairs.end(), [](auto& p) { return p.essential; }) == 2);
  CHECK(h0.size() == 10);
  CHECK(compute_persistence(rips_filtration(clusters, 1.0), 0).pairs == h0.pairs);
}

TEST_CASE("H0 bar count matches component count at every scale") {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 30));
    const auto cloud = random_cloud(rng, n);
    const double max_edge = rng.uniform(0.3, 2.0);
    const auto h0 = rips_persistence(cloud, {max_edge}, std::array{0})[0];
    const double eps = rng.uniform(0.0, max_edge);
    UnionFind uf(n);
    std::size_t components = n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if ((cloud.points[i] - cloud.points[j]).norm() <= eps && uf.unite(i, j)) --components;
      }
    }
    CHECK(alive_at(h0, eps) == components);
    for (const auto& p : h0.pairs) CHECK((p.death > p.birth && p.birth >= 0.0));
  }
}

TEST_CASE("circle has one dominant loop") {
  Rng rng(5);
  auto circle = [&](std::size_t n) {
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = rng.uniform(0.0, 2 * std::numbers::pi);
      c.points.emplace_back(std::cos(t), std::sin(t), 0.0);
    }
    return c;
  };
  const double ideal = std::sqrt(3.0);  // loop dies when the inscribed equilateral triangle appears
  const auto small = circle(64);
  const auto h1_small = rips_persistence(small, {})[1];
  CHECK(compute_persistence(rips_filtration(small, 2.0), 1).pairs == h1_small.pairs);

  double previous_error = INFINITY;
  for (std::size_t n : {64u, 256u, 1024u}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto h1 = rips_persistence(circle(n), {})[1];
    MESSAGE("circle n=" << n << " H1 in " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s");
    auto sorted = quantile_threshold(h1, 1.0).pairs;
    REQUIRE(!sorted.empty());
    const double dominant = sorted[0].persistence();
    const double error = std::abs(dominant - ideal) / ideal;
    for (std::size_t i = 1; i < sorted.size(); ++i) CHECK(sorted[i].persistence() < 0.1 * dominant);
    CHECK(error <= previous_error + 1e-12);
    previous_error = error;
    if (n == 1024) CHECK(error < 0.1);
  }
}

TEST_CASE("quantile_threshold") {
  PersistenceDiagram d;
  for (int i = 0; i < 10; ++i) d.pairs.push_back({0.01 * i, 0.01 * i + 0.1 + 0.01 * i, false});
  auto t = quantile_threshold(d, 0.10);
  REQUIRE(t.size() == 1);
  CHECK(t.pairs[0].birth == 0.09);
  CHECK(quantile_threshold(d, 1.0).size() == 10);
  CHECK(quantile_threshold(PersistenceDiagram{}, 0.1).empty());
  CHECK_THROWS_AS(quantile_threshold(d, 0.0), Error);

  Rng rng(3);
  PersistenceDiagram r;
  for (int i = 0; i < 23; ++i) {
    const double b = rng.uniform(), p = std::round(rng.uniform() * 5) / 10;  // deliberate ties
    r.pairs.push_back({b, b + p + 0.01, false});
  }
  const auto kept = quantile_threshold(r, 0.10);
  REQUIRE(kept.size() == 3);
  auto oracle = r.pairs;
  std::stable_sort(oracle.begin(), oracle.end(), [](auto& a, auto& b) {
    return std::make_tuple(-(a.death - a.birth), a.birth, a.death) < std::make_tuple(-(b.death - b.birth), b.birth, b.death);
  });
  for (int i = 0; i < 3; ++i) CHECK(kept.pairs[i] == oracle[i]);
}

TEST_CASE("scale_dataset") {
  PersistenceDiagram a;
  a.pairs = {{0.0, 2.0, false}};
  auto [scaled, s] = scale_dataset(std::vector{a});
  CHECK(s == 2.0);
  CHECK(scaled[0].pairs[0] == PersistencePair{0.0, 1.0, false});
  auto [again, s2] = scale_dataset(scaled);
  CHECK(s2 == 1.0);
  CHECK(again[0].pairs == scaled[0].pairs);

  Rng rng(8);
  std::vector<PersistenceDiagram> mixed(5);
  for (auto& d : mixed) {
    for (int i = 0; i < 6; ++i) {
      const double b = rng.uniform(0.0, 0.2);
      d.pairs.push_back({b, b + rng.uniform(0.01, 0.17), false});
    }
  }
  mixed[2].pairs.push_back({0.1, 0.37, false});
  const auto [out, scale] = scale_dataset(mixed);
  CHECK(scale == 0.37);
  int at_one = 0;
  for (const auto& d : out) {
    for (const auto& p : d.pairs) {
      CHECK(p.death <= 1.0);
      at_one += p.death == 1.0;
    }
  }
  CHECK(at_one == 1);
  CHECK_THROWS_AS(scale_dataset(std::vector<PersistenceDiagram>(2)), Error);
}

TEST_CASE("diagram CSV round trip") {
  Rng rng(1);
  const auto diagrams = rips_persistence(random_cloud(rng, 30), {});
  const auto path = std::filesystem::temp_directory_path() / "topo_test_diagram.csv";
  write_diagram_csv(path, diagrams);
  const auto back = read_diagram_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].pairs == finite_part(diagrams[0]).pairs);
  CHECK(back[1].pairs == finite_part(diagrams[1]).pairs);
  CHECK(read_diagram_csv(path, 1).pairs == finite_part(diagrams[1]).pairs);
  std::filesystem::remove(path);
}
