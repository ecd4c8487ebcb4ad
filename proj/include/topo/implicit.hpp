#pragma once

#include <functional>
#include <span>
#include <vector>

#include "topo/mesh.hpp"

namespace topo {

/// Implicit surface: negative inside, positive outside. `bounds` encloses the
/// zero level set.
struct ScalarField {
  std::function<double(const Vec3&)> eval;
  Aabb bounds;

  double operator()(const Vec3& p) const { return eval(p); }
};

/// Exact signed distance to a torus with ring radius R around `axis` through
/// `center` and tube radius r. Requires 0 < r < R.
ScalarField torus_sdf(const Vec3& center, const Vec3& axis, double ring_radius, double tube_radius);

ScalarField sphere_sdf(const Vec3& center, double radius);

/// -(1/k) log(sum exp(-k s_i)), evaluated with a max shift.
double softmin_combine(std::span<const double> values, double sharpness);

/// Pointwise softmin of several fields; bounds are the union of the inputs'
/// bounds grown by log(n)/k to cover the level-set bulge.
ScalarField softmin_field(std::vector<ScalarField> fields, double sharpness);

}  // namespace topo
