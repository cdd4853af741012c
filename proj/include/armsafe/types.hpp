#pragma once

#include <Eigen/Dense>

namespace armsafe {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using RowVec3 = Eigen::RowVector3d;

inline constexpr int kJoints = 3;

/// Measured joint configuration (rad) and velocity (rad/s).
struct JointState {
  Vec3 q = Vec3::Zero();
  Vec3 dq = Vec3::Zero();

  bool finite() const { return q.allFinite() && dq.allFinite(); }
};

}  // namespace armsafe
