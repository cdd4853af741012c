#pragma once

#include "armsafe/nominal_model.hpp"
#include "armsafe/types.hpp"

namespace armsafe {

/// Outer-loop PD gains on joint position error (per joint, > 0).
struct TrackingGains {
  Vec3 kp{100.0, 100.0, 100.0};  // 1/s^2
  Vec3 kd{20.0, 20.0, 20.0};     // 1/s

  void validate() const;
};

enum class ProfileKind { sim_profile, hw_profile, custom };

/// q*_i(t) = amplitude_i sin(frequency_i t) + offset_i.
struct ReferenceProfile {
  ProfileKind kind = ProfileKind::sim_profile;
  Vec3 amplitude{0.5, 0.25, 0.25};
  Vec3 frequency{1.0, 2.0, 2.0};
  Vec3 offset{0.0, 0.5, 1.5707963267948966};

  /// [0.5 sin t, 0.25 sin 2t + 0.5, 0.25 sin 2t + pi/2]
  static ReferenceProfile sim();
  /// As sim() with the shoulder offset 0.534.
  static ReferenceProfile hw();
};

struct ReferenceSample {
  Vec3 q = Vec3::Zero();
  Vec3 dq = Vec3::Zero();
  Vec3 ddq = Vec3::Zero();
};

ReferenceSample reference_at(const ReferenceProfile& profile, double t);

/// u0 = qdd* + kp (q* - q) + kd (dq* - dq).
Vec3 position_control_u0(const ReferenceSample& ref, const JointState& meas,
                         const TrackingGains& gains);

/// dq_d0 = kd_bar^-1 (m_bar u0 + c_bar dq + g_bar).
Vec3 nominal_inversion(const Vec3& u0, const NominalModel& nominal,
                       const Vec3& dq);

/// dq_d = dq_d0 - kd_bar^-1 m_bar f_hat.
Vec3 disturbance_rejection(const Vec3& qd0_dot, const Vec3& f_hat,
                           const NominalModel& nominal);

/// Produces the position command q_d by trapezoidal integration of the
/// velocity commands, starting from the measured initial configuration.
class CommandIntegrator {
 public:
  explicit CommandIntegrator(const Vec3& q0) : q_d_(q0) {}

  /// Fold in the command for the next tick and return the updated q_d.
  const Vec3& push(const Vec3& dq_d, double dt);
  const Vec3& q_d() const { return q_d_; }

 private:
  Vec3 q_d_;
  Vec3 last_ = Vec3::Zero();
  bool primed_ = false;
};

}  // namespace armsafe
