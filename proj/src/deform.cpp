#include "topo/deform.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "topo/error.hpp"

namespace topo {
namespace {

void check(const RigidTwist& t) {
  const Eigen::Matrix3d gram = t.rotation.transpose() * t.rotation;
  require((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9 && t.rotation.determinant() > 0.0,
          "rotation must be orthonormal with determinant +1");
  require(std::abs(t.twist_axis.norm() - 1.0) < 1e-9, "twist axis must be a unit vector");
  require(std::isfinite(t.twist_rate) && t.translation.allFinite(), "transform must be finite");
}

Vec3 transform_point(const Vec3& p, const RigidTwist& t) {
  Vec3 q = p;
  if (t.twist_rate != 0.0) {
    const double angle = t.twist_rate * p.dot(t.twist_axis);
    q = Eigen::AngleAxisd(angle, t.twist_axis) * p;
  }
  return t.rotation * q + t.translation;
}

}  // namespace

Vec3 apply_rigid_twist(const Vec3& p, const RigidTwist& transform) {
  check(transform);
  return transform_point(p, transform);
}

TriangleMesh apply_rigid_twist(const TriangleMesh& mesh, const RigidTwist& transform) {
  check(transform);
  validate_indices(mesh);
  TriangleMesh out;
  out.triangles = mesh.triangles;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back(transform_point(v, transform));
  return out;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

RigidTwist random_rigid_twist(Rng& rng, double max_twist_rate) {
  RigidTwist t;
  t.rotation = random_rotation(rng);
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  t.twist_axis = axis.normalized();
  t.twist_rate = rng.uniform(-max_twist_rate, max_twist_rate);
  return t;
}

}  // namespace topo
