#pragma once

#include "armsafe/types.hpp"

namespace armsafe {

/// The only surface a closed-architecture controller exposes: joint
/// measurements out, kinematic commands (q_d, dq_d) in.
class KinematicPort {
 public:
  virtual ~KinematicPort() = default;
  virtual JointState measure() const = 0;
  virtual void command(const Vec3& q_d, const Vec3& dq_d) = 0;
};

}  // namespace armsafe
