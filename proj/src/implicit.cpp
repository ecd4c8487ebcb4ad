#include "topo/implicit.hpp"

#include <algorithm>
#include <cmath>

#include "topo/error.hpp"

namespace topo {

ScalarField torus_sdf(const Vec3& center, const Vec3& axis, double ring_radius, double tube_radius) {
  require(tube_radius > 0.0 && tube_radius < ring_radius, "torus radii must satisfy 0 < r < R");
  require(axis.norm() > 0.0, "torus axis must be non-zero");
  const Vec3 a = axis.normalized();
  ScalarField field;
  field.eval = [center, a, ring_radius, tube_radius](const Vec3& p) {
    const Vec3 q = p - center;
    const double h = q.dot(a);
    const double radial = (q - h * a).norm();
    return std::hypot(radial - ring_radius, h) - tube_radius;
  };
  // Per-axis half extent of the torus around `a`.
  Vec3 half;
  for (int i = 0; i < 3; ++i) {
    half[i] = ring_radius * std::sqrt(std::max(0.0, 1.0 - a[i] * a[i])) + tube_radius;
  }
  field.bounds = {center - half, center + half};
  return field;
}

ScalarField sphere_sdf(const Vec3& center, double radius) {
  require(radius > 0.0, "sphere radius must be positive");
  ScalarField field;
  field.eval = [center, radius](const Vec3& p) { return (p - center).norm() - radius; };
  const Vec3 r = Vec3::Constant(radius);
  field.bounds = {center - r, center + r};
  return field;
}

double softmin_combine(std::span<const double> values, double sharpness) {
  require(!values.empty(), "softmin of an empty list");
  require(sharpness > 0.0, "softmin sharpness must be positive");
  const double lo = *std::min_element(values.begin(), values.end());
  double sum = 0.0;
  for (double s : values) sum += std::exp(-sharpness * (s - lo));
  return lo - std::log(sum) / sharpness;
}

ScalarField softmin_field(std::vector<ScalarField> fields, double sharpness) {
  require(!fields.empty(), "softmin of an empty field list");
  require(sharpness > 0.0, "softmin sharpness must be positive");
  Aabb box = fields.front().bounds;
  for (const auto& f : fields) {
    box.lo = box.lo.cwiseMin(f.bounds.lo);
    box.hi = box.hi.cwiseMax(f.bounds.hi);
  }
  const double bulge = std::log(static_cast<double>(fields.size())) / sharpness;
  box.lo.array() -= bulge;
  box.hi.array() += bulge;
  ScalarField out;
  out.bounds = box;
  out.eval = [fields = std::move(fields), sharpness](const Vec3& p) {
    thread_local std::vector<double> values;
    values.resize(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) values[i] = fields[i](p);
    return softmin_combine(values, sharpness);
  };
  return out;
}

}  // namespace topo
