#pragma once

#include <Eigen/Dense>

#include "topo/mesh.hpp"
#include "topo/rng.hpp"

namespace topo {

/// Twist about an axis through the origin followed by a rigid motion:
///   p -> rotation * twist(p) + translation,
/// where twist(p) rotates p about `twist_axis` by `twist_rate * dot(p, twist_axis)`.
struct RigidTwist {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();
  Vec3 twist_axis = Vec3::UnitZ();
  double twist_rate = 0.0;  // radians per unit length along the axis
};

/// Connectivity is copied untouched; only vertex positions move.
TriangleMesh apply_rigid_twist(const TriangleMesh& mesh, const RigidTwist& transform);

Vec3 apply_rigid_twist(const Vec3& p, const RigidTwist& transform);

/// Uniformly random rotation and twist axis, twist rate uniform in
/// [-max_twist_rate, max_twist_rate], zero translation.
RigidTwist random_rigid_twist(Rng& rng, double max_twist_rate);

Eigen::Matrix3d random_rotation(Rng& rng);

}  // namespace topo
