#include "topo/shapes.hpp"

#include <cmath>
#include <numbers>

#include "topo/error.hpp"

namespace topo {
namespace {

constexpr double kPi = std::numbers::pi;

void check_superquadric(Scales s, Exponents e, GridResolution r) {
  require(s.x > 0 && s.y > 0 && s.z > 0, "scales must be positive");
  require(e.e1 >= 0.2 && e.e1 <= 2.0 && e.e2 >= 0.2 && e.e2 <= 2.0,
          "superquadric exponents must lie in [0.2, 2.0]");
  require(r.nu >= 8 && r.nv >= 8, "grid resolution must be at least 8 per direction");
}

double signed_pow(double value, double exponent) {
  return std::copysign(std::pow(std::abs(value), exponent), value);
}

}  // namespace

double signed_cos_pow(double angle, double exponent) { return signed_pow(std::cos(angle), exponent); }
double signed_sin_pow(double angle, double exponent) { return signed_pow(std::sin(angle), exponent); }

TriangleMesh superellipsoid_mesh(Scales s, Exponents e, GridResolution r) {
  check_superquadric(s, e, r);
  TriangleMesh mesh;
  const int rings = r.nv - 1;
  mesh.vertices.reserve(static_cast<std::size_t>(r.nu) * rings + 2);
  mesh.vertices.emplace_back(0.0, 0.0, -s.z);  // south pole
  mesh.vertices.emplace_back(0.0, 0.0, s.z);   // north pole
  for (int k = 1; k <= rings; ++k) {
    const double v = -kPi / 2 + kPi * k / r.nv;
    for (int i = 0; i < r.nu; ++i) {
      const double u = -kPi + 2 * kPi * i / r.nu;
      const double cv = signed_cos_pow(v, e.e1);
      mesh.vertices.emplace_back(s.x * cv * signed_cos_pow(u, e.e2), s.y * cv * signed_sin_pow(u, e.e2),
                                 s.z * signed_sin_pow(v, e.e1));
    }
  }
  auto at = [&](int i, int k) { return 2 + (k - 1) * r.nu + (i % r.nu); };
  for (int i = 0; i < r.nu; ++i) {
    mesh.triangles.push_back({0, at(i + 1, 1), at(i, 1)});
    for (int k = 1; k < rings; ++k) {
      const int a = at(i, k), b = at(i + 1, k), c = at(i + 1, k + 1), d = at(i, k + 1);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
    mesh.triangles.push_back({at(i, rings), at(i + 1, rings), 1});
  }
  return mesh;
}

TriangleMesh supertoroid_mesh(Scales s, double ring_radius, Exponents e, GridResolution r) {
  check_superquadric(s, e, r);
  require(ring_radius > 1.0, "ring radius must exceed the unit tube radius");
  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(r.nu) * r.nv);
  for (int k = 0; k < r.nv; ++k) {
    const double v = -kPi + 2 * kPi * k / r.nv;
    const double ring = ring_radius + signed_cos_pow(v, e.e1);
    for (int i = 0; i < r.nu; ++i) {
      const double u = -kPi + 2 * kPi * i / r.nu;
      mesh.vertices.emplace_back(s.x * ring * signed_cos_pow(u, e.e2), s.y * ring * signed_sin_pow(u, e.e2),
                                 s.z * signed_sin_pow(v, e.e1));
    }
  }
  auto at = [&](int i, int k) { return (k % r.nv) * r.nu + (i % r.nu); };
  for (int k = 0; k < r.nv; ++k) {
    for (int i = 0; i < r.nu; ++i) {
      const int a = at(i, k), b = at(i + 1, k), c = at(i + 1, k + 1), d = at(i, k + 1);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }
  return mesh;
}

TriangleMesh cone_mesh(double radius, double height, int segments) {
  require(radius > 0.0 && height > 0.0, "cone radius and height must be positive");
  require(segments >= 3, "cone needs at least 3 segments");
  TriangleMesh mesh;
  for (int i = 0; i < segments; ++i) {
    const double a = 2 * kPi * i / segments;
    mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
  }
  const int apex = segments;
  const int base = segments + 1;
  mesh.vertices.emplace_back(0.0, 0.0, height);
  mesh.vertices.emplace_back(0.0, 0.0, 0.0);
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    mesh.triangles.push_back({i, j, apex});
    mesh.triangles.push_back({j, i, base});
  }
  return mesh;
}

}  // namespace topo
