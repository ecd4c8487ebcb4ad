#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "doctest.h"
#include "topo/deform.hpp"
#include "topo/error.hpp"
#include "topo/implicit.hpp"
#include "topo/io.hpp"
#include "topo/marching_cubes.hpp"
#include "topo/point_cloud.hpp"
#include "topo/rng.hpp"
#include "topo/shapes.hpp"

using namespace topo;

namespace {

void check_closed_surface(const TriangleMesh& mesh, long chi) {
  CHECK(euler_characteristic(mesh) == chi);
  CHECK(connected_components(mesh) == 1);
  CHECK(is_manifold(mesh));
  CHECK(is_consistently_oriented(mesh));
  CHECK(signed_volume(mesh) > 0.0);
}

template <typename F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::io_error;
}

}  // namespace

TEST_CASE("superellipsoid is a closed genus-0 surface") {
  check_closed_surface(superellipsoid_mesh({1, 1, 1}, {1, 1}, {32, 32}), 2);
  check_closed_surface(superellipsoid_mesh({2, 1, 0.5}, {0.5, 1.5}, {24, 16}), 2);
  check_closed_surface(superellipsoid_mesh({1, 1, 1}, {0.2, 2.0}, {8, 8}), 2);
}

TEST_CASE("superellipsoid vertex count matches exhaustive seam welding") {
  // Oracle: every parametric sample on the closed (nu+1) x (nv+1) grid,
  // welded by exhaustive duplicate detection.
  const int nu = 8, nv = 8;
  std::vector<Vec3> raw;
  for (int k = 0; k <= nv; ++k) {
    for (int i = 0; i <= nu; ++i) {
      const double u = -std::numbers::pi + 2 * std::numbers::pi * i / nu;
      const double v = -std::numbers::pi / 2 + std::numbers::pi * k / nv;
      raw.emplace_back(std::cos(v) * std::cos(u), std::cos(v) * std::sin(u), std::sin(v));
    }
  }
  std::vector<Vec3> unique;
  for (const auto& p : raw) {
    if (std::none_of(unique.begin(), unique.end(), [&](const Vec3& q) { return (p - q).norm() < 1e-9; })) {
      unique.push_back(p);
    }
  }
  CHECK(unique.size() == 58);
  CHECK(superellipsoid_mesh({1, 1, 1}, {1, 1}, {8, 8}).vertex_count() == unique.size());
}

TEST_CASE("superquadric parameter validation") {
  CHECK(error_code([] { superellipsoid_mesh({0, 1, 1}, {1, 1}, {16, 16}); }) == Errc::invalid_parameter);
  CHECK(error_code([] { superellipsoid_mesh({1, 1, 1}, {1, 1}, {4, 16}); }) == Errc::invalid_parameter);
  CHECK(error_code([] { superellipsoid_mesh({1, 1, 1}, {0.1, 1}, {16, 16}); }) == Errc::invalid_parameter);
  CHECK(error_code([] { supertoroid_mesh({1, 1, 1}, 1.0, {1, 1}, {16, 16}); }) == Errc::invalid_parameter);
}

TEST_CASE("supertoroid is a closed genus-1 surface") {
  check_closed_surface(supertoroid_mesh({1, 1, 1}, 2.0, {1, 1}, {32, 24}), 0);
  check_closed_surface(supertoroid_mesh({1.5, 0.7, 0.4}, 1.3, {0.3, 1.8}, {40, 12}), 0);
  const auto mesh = supertoroid_mesh({1, 1, 1}, 2.0, {1, 1}, {16, 16});
  // Periodic grid: each node owns one u-edge, one v-edge and one diagonal.
  const auto counts = count_simplices(mesh);
  CHECK(counts.vertices == 256);
  CHECK(counts.edges == 3 * 16 * 16);
  CHECK(counts.faces == 2 * 16 * 16);
  CHECK(euler_characteristic(mesh) == 0);
}

TEST_CASE("cone counts follow the construction rule") {
  for (int s = 3; s <= 20; ++s) {
    const auto mesh = cone_mesh(1.0, 1.0, s);
    const auto c = count_simplices(mesh);
    CHECK(c.faces == static_cast<std::size_t>(2 * s));
    CHECK(c.vertices == static_cast<std::size_t>(s + 2));
    CHECK(c.edges == static_cast<std::size_t>(3 * s));
    check_closed_surface(mesh, 2);
  }
  CHECK(error_code([] { cone_mesh(1.0, 0.0, 8); }) == Errc::invalid_parameter);
  CHECK(error_code([] { cone_mesh(1.0, 1.0, 2); }) == Errc::invalid_parameter);
}

TEST_CASE("torus signed distance") {
  const auto f = torus_sdf(Vec3(0.5, -1, 2), Vec3(0, 0, 1), 2.0, 0.5);
  CHECK(f(Vec3(0.5 + 2.0, -1, 2)) == doctest::Approx(-0.5));
  CHECK(f(Vec3(0.5, -1 - 2.0, 2)) == doctest::Approx(-0.5));
  CHECK(f(Vec3(0.5, -1, 2)) == doctest::Approx(1.5));
  CHECK(f(Vec3(0.5 + 3.5, -1, 2)) == doctest::Approx(1.0));
  const auto tilted = torus_sdf(Vec3::Zero(), Vec3(1, 1, 0), 1.0, 0.25);
  const Vec3 on_ring = Vec3(0, 0, 1);
  CHECK(tilted(on_ring) == doctest::Approx(-0.25));
  CHECK(error_code([] { torus_sdf(Vec3::Zero(), Vec3::UnitZ(), 1.0, 1.0); }) == Errc::invalid_parameter);
}

TEST_CASE("softmin combination") {
  const double one[] = {0.37};
  CHECK(softmin_combine(one, 5.0) == doctest::Approx(0.37).epsilon(1e-15));
  const double zeros[] = {0.0, 0.0};
  CHECK(softmin_combine(zeros, 1.0) == doctest::Approx(-std::log(2.0)));
  CHECK(error_code([] { softmin_combine(std::span<const double>{}, 1.0); }) == Errc::invalid_parameter);

  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.uniform_int(0, 8));
    for (auto& x : v) x = rng.uniform(-2, 2);
    const double lo = *std::min_element(v.begin(), v.end());
    CHECK(softmin_combine(v, 32.0) <= lo);
    const double sharp = softmin_combine(v, 1e3);
    CHECK(lo - sharp < 1e-2);
    CHECK(sharp <= lo);
  }
  // Large spreads must not overflow.
  const double spread[] = {-500.0, 500.0};
  CHECK(std::isfinite(softmin_combine(spread, 100.0)));
}

TEST_CASE("marching cubes on a sphere") {
  GridSpec grid;
  grid.samples = {64, 64, 64};
  grid.bounds = {Vec3::Constant(-1), Vec3::Constant(1)};
  const auto mesh = marching_cubes(sphere_sdf(Vec3::Zero(), 0.5), grid);
  check_closed_surface(mesh, 2);
  CHECK(signed_volume(mesh) == doctest::Approx(4.0 / 3.0 * std::numbers::pi * 0.125).epsilon(0.02));
}

TEST_CASE("marching cubes recovers torus and 3-torus genus") {
  const auto torus = torus_sdf(Vec3::Zero(), Vec3::UnitZ(), 1.0, 0.35);
  check_closed_surface(marching_cubes(torus, padded_grid(torus.bounds, 64)), 0);

  std::vector<ScalarField> tori;
  for (int i = 0; i < 3; ++i) tori.push_back(torus_sdf(Vec3(2.2 * i, 0, 0), Vec3::UnitZ(), 1.0, 0.35));
  const auto chain = softmin_field(tori, 32.0);
  check_closed_surface(marching_cubes(chain, padded_grid(chain.bounds, 96)), 2 - 2 * 3);
}

TEST_CASE("marching cubes error paths") {
  GridSpec grid;
  grid.samples = {16, 16, 16};
  grid.bounds = {Vec3::Constant(-1), Vec3::Constant(1)};
  const auto sphere = sphere_sdf(Vec3::Zero(), 0.5);
  CHECK(error_code([&] { marching_cubes(sphere, grid, 10.0); }) == Errc::open_surface);
  CHECK(error_code([&] { marching_cubes(sphere, grid, -10.0); }) == Errc::empty_mesh);
  const auto big = sphere_sdf(Vec3::Zero(), 1.5);
  CHECK(error_code([&] { marching_cubes(big, grid); }) == Errc::open_surface);
  grid.samples = {8, 16, 16};
  CHECK(error_code([&] { marching_cubes(sphere, grid); }) == Errc::invalid_parameter);
}

TEST_CASE("marching cubes output is manifold on irregular fields") {
  // Random sums of Gaussian bumps exercise the ambiguous cube cases.
  Rng rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<std::pair<Vec3, double>> bumps;
    for (int b = 0; b < 25; ++b) {
      bumps.emplace_back(Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)),
                         rng.uniform(0.5, 1.5));
    }
    ScalarField field;
    field.bounds = {Vec3::Constant(-1), Vec3::Constant(1)};
    field.eval = [bumps](const Vec3& p) {
      double s = 0.0;
      for (const auto& [c, w] : bumps) s += w * std::exp(-(p - c).squaredNorm() / 0.02);
      return 0.4 - s + std::max(0.0, p.norm() - 0.75) * 10.0;
    };
    GridSpec grid;
    grid.samples = {20, 20, 20};
    grid.bounds = field.bounds;
    const auto mesh = marching_cubes(field, grid);
    CHECK(is_manifold(mesh));
    CHECK(is_consistently_oriented(mesh));
    for (const auto& part : split_components(mesh)) CHECK(euler_characteristic(part) % 2 == 0);
  }
}

TEST_CASE("rigid twist") {
  const auto torus = supertoroid_mesh({1, 1, 1}, 2.0, {1, 1}, {24, 16});
  const auto same = apply_rigid_twist(torus, RigidTwist{});
  CHECK(same.vertices == torus.vertices);
  CHECK(same.triangles == torus.triangles);

  RigidTwist t;
  t.twist_axis = Vec3::UnitZ();
  t.twist_rate = 2 * std::numbers::pi / 2.0;  // one turn over the torus height
  t.translation = Vec3(1, 2, 3);
  const auto twisted = apply_rigid_twist(torus, t);
  CHECK(euler_characteristic(twisted) == 0);
  CHECK(is_manifold(twisted));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = random_rigid_twist(rng, 3.0);
    r.translation = Vec3(rng.normal(), rng.normal(), rng.normal());
    const auto out = apply_rigid_twist(torus, r);
    const auto a = count_simplices(torus), b = count_simplices(out);
    CHECK(a.vertices == b.vertices);
    CHECK(a.edges == b.edges);
    CHECK(a.faces == b.faces);
    CHECK(euler_characteristic(out) == 0);
    CHECK(signed_volume(out) > 0.0);
    CHECK(is_consistently_oriented(out));
  }

  RigidTwist bad;
  bad.rotation(0, 0) = 2.0;
  CHECK(error_code([&] { apply_rigid_twist(torus, bad); }) == Errc::invalid_parameter);
  RigidTwist reflection;
  reflection.rotation(2, 2) = -1.0;
  CHECK(error_code([&] { apply_rigid_twist(torus, reflection); }) == Errc::invalid_parameter);
}

TEST_CASE("surface sampling") {
  const auto mesh = superellipsoid_mesh({2, 1, 0.5}, {0.7, 1.2}, {16, 12});
  const auto a = sample_surface(mesh, 1024, 99);
  const auto b = sample_surface(mesh, 1024, 99);
  CHECK(a.points == b.points);
  CHECK(sample_surface(mesh, 1024, 100).points != a.points);

  TriangleMesh tri;
  tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  tri.triangles = {{0, 1, 2}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Vec3 p = sample_surface(tri, 1, seed).points[0];
    CHECK(p.z() == 0.0);
    CHECK(p.x() >= 0.0);
    CHECK(p.y() >= 0.0);
    CHECK(p.x() + p.y() <= 1.0 + 1e-12);
  }

  TriangleMesh flat;
  flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  flat.triangles = {{0, 1, 2}};
  CHECK(error_code([&] { sample_surface(flat, 10, 1); }) == Errc::invalid_parameter);
}

TEST_CASE("surface sampling frequencies follow triangle areas") {
  // Cone with a stretched cap has very unequal triangle areas.
  const auto mesh = cone_mesh(1.0, 3.0, 12);
  const std::size_t n = 100000;
  const auto sample = sample_surface_with_faces(mesh, n, 7);
  std::vector<double> counts(mesh.triangle_count(), 0.0);
  for (int t : sample.triangle) counts[t] += 1.0;
  const double total_area = surface_area(mesh);
  double chi2 = 0.0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& p0 = mesh.vertices[tri[0]];
    const double area = 0.5 * (mesh.vertices[tri[1]] - p0).cross(mesh.vertices[tri[2]] - p0).norm();
    const double expected = n * area / total_area;
    chi2 += (counts[t] - expected) * (counts[t] - expected) / expected;
  }
  // 23 degrees of freedom: the 0.999 quantile is 49.7.
  CHECK(chi2 < 49.7);
  // Every sample lies in the plane of its triangle.
  for (std::size_t s = 0; s < 200; ++s) {
    const auto& tri = mesh.triangles[sample.triangle[s]];
    const Vec3& p0 = mesh.vertices[tri[0]];
    const Vec3 normal = (mesh.vertices[tri[1]] - p0).cross(mesh.vertices[tri[2]] - p0).normalized();
    CHECK(std::abs(normal.dot(sample.cloud.points[s] - p0)) < 1e-12);
  }
}

TEST_CASE("unit-sphere normalization") {
  PointCloud two;
  two.points = {Vec3(0, 0, 0), Vec3(0, 0, 2)};
  const auto n = normalize_unit_sphere(two);
  CHECK((n.points[0] - Vec3(0, 0, -1)).norm() < 1e-15);
  CHECK((n.points[1] - Vec3(0, 0, 1)).norm() < 1e-15);

  Rng rng(3);
  PointCloud cloud;
  for (int i = 0; i < 100; ++i) cloud.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
  const auto once = normalize_unit_sphere(cloud);
  const auto twice = normalize_unit_sphere(once);
  PointCloud moved;
  for (const auto& p : cloud.points) moved.points.push_back(7.0 * p + Vec3(3, -4, 5));
  const auto moved_n = normalize_unit_sphere(moved);
  double max_norm = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK((once.points[i] - twice.points[i]).norm() < 1e-12);
    CHECK((once.points[i] - moved_n.points[i]).norm() < 1e-12);
    max_norm = std::max(max_norm, once.points[i].norm());
  }
  CHECK(max_norm == doctest::Approx(1.0));

  PointCloud same;
  same.points = {Vec3(1, 1, 1), Vec3(1, 1, 1)};
  for (const auto& p : normalize_unit_sphere(same).points) CHECK(p == Vec3::Zero());
  CHECK(error_code([] { normalize_unit_sphere(PointCloud{}); }) == Errc::invalid_parameter);
}

TEST_CASE("mesh topology measurements") {
  const auto torus = supertoroid_mesh({1, 1, 1}, 2.0, {1, 1}, {16, 12});
  CHECK(euler_characteristic(torus) == 0);
  CHECK(connected_components(torus) == 1);
  CHECK(is_manifold(torus));

  const auto s1 = superellipsoid_mesh({1, 1, 1}, {1, 1}, {12, 12});
  RigidTwist shift;
  shift.translation = Vec3(5, 0, 0);
  const auto two = merge_meshes({s1, apply_rigid_twist(s1, shift)});
  CHECK(euler_characteristic(two) == 4);
  CHECK(connected_components(two) == 2);
  CHECK(split_components(two).size() == 2);

  auto holed = torus;
  holed.triangles.pop_back();
  CHECK_FALSE(is_manifold(holed));

  // Two cones glued apex to apex share a vertex whose link has two cycles.
  auto c1 = cone_mesh(1, 1, 6);
  auto c2 = cone_mesh(1, 1, 6);
  for (auto& v : c2.vertices) v = Vec3(v.x(), v.y(), 2.0 - v.z());
  for (auto& t : c2.triangles) std::swap(t[1], t[2]);
  auto pinched = merge_meshes({c1, c2});
  const int apex2 = static_cast<int>(c1.vertex_count()) + 6;
  for (auto& t : pinched.triangles) {
    for (auto& v : t) {
      if (v == apex2) v = 6;
    }
  }
  CHECK_FALSE(is_manifold(pinched));
}

TEST_CASE("mesh and cloud files round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "topo_geometry_io";
  std::filesystem::remove_all(dir);
  const auto mesh = apply_rigid_twist(supertoroid_mesh({1, 0.5, 0.3}, 1.7, {0.6, 1.3}, {20, 10}),
                                      RigidTwist{Eigen::Matrix3d::Identity(), Vec3(0.1, 0.2, 0.3), Vec3::UnitX(), 0.4});
  write_off(dir / "m.off", mesh);
  write_obj(dir / "m.obj", mesh);
  for (const auto& path : {dir / "m.off", dir / "m.obj"}) {
    const auto back = read_mesh(path);
    CHECK(back.vertices == mesh.vertices);
    CHECK(back.triangles == mesh.triangles);
  }
  const auto cloud = sample_surface(mesh, 300, 1);
  write_pcf(dir / "c.pcf", cloud);
  write_cloud_csv(dir / "c.csv", cloud);
  const auto pcf = read_pcf(dir / "c.pcf");
  const auto csv = read_cloud(dir / "c.csv");
  REQUIRE(pcf.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK((pcf.points[i] - cloud.points[i]).norm() < 1e-6);
    CHECK(csv.points[i] == cloud.points[i]);
  }
  // Layout: magic, u32 count, 12 bytes per point.
  CHECK(std::filesystem::file_size(dir / "c.pcf") == 8 + 12 * cloud.size());
  std::filesystem::remove_all(dir);
}
