#pragma once

// Ground-truth closed-architecture plant: a hidden inner-loop controller
// wrapped around the Euler-Lagrange arm. Outer-loop code must only talk to it
// through KinematicPort; the types in this header are for the harness that
// builds scenarios and for tests.

#include <limits>
#include <memory>

#include "armsafe/arm_dynamics.hpp"
#include "armsafe/kinematic_port.hpp"
#include "armsafe/nominal_model.hpp"

namespace armsafe {

enum class PsiVariant { pd_only, pd_plus_integral, pd_plus_gravity_comp };

struct InnerLoopConfig {
  Vec3 kp = Vec3::Ones();
  Vec3 kd = Vec3::Ones();
  PsiVariant psi_variant = PsiVariant::pd_only;
  Vec3 integral_gain = Vec3::Zero();
  /// Output is a voltage v and the plant applies tau = B v.
  bool voltage_mode = false;
  /// Anti-windup bound on |integral of (q - q_d)| per joint (rad s).
  double integral_clamp = 10.0;

  void validate() const;
};

/// c + a sin(w t + phase), active for t_on <= t < t_off, zero elsewhere.
/// With rise_time > 0 the switch-on follows a half-cosine ramp, so the
/// signal stays continuously differentiable after t_on.
struct TimeSignal {
  Vec3 constant = Vec3::Zero();
  Vec3 amplitude = Vec3::Zero();
  Vec3 frequency = Vec3::Zero();  // rad/s
  Vec3 phase = Vec3::Zero();
  double t_on = 0.0;
  double t_off = std::numeric_limits<double>::infinity();
  double rise_time = 0.0;

  Vec3 operator()(double t) const;
  bool is_zero() const { return constant.isZero() && amplitude.isZero(); }
};

struct DisturbanceProfile {
  /// Task-space force on the wrist centre (N), mapped through J^T.
  TimeSignal force;
  /// Additive per-joint term, in volts when joint_offset_in_volts is set
  /// (scaled by B), otherwise in N m.
  TimeSignal joint_offset;
  bool joint_offset_in_volts = false;
  /// Point mass at the wrist centre for this scenario (kg).
  double payload_mass = 0.0;
};

/// Inner-loop output: -kp (q - q_d) - kd (dq - dq_d) + psi terms.
/// `integ` is the accumulated integral of (q - q_d).
Vec3 inner_loop_output(const InnerLoopConfig& cfg, const JointState& meas,
                       const Vec3& cmd_q_d, const Vec3& cmd_dq_d,
                       const Vec3& integ, const ArmParams& params);

struct ActuatorSignal {
  Vec3 value = Vec3::Zero();
  bool is_voltage = false;
};

/// Torque actually reaching the joints from actuator plus disturbances.
Vec3 applied_torque(const ArmParams& params, const JointState& state,
                    const ActuatorSignal& actuator,
                    const DisturbanceProfile& dist, double t);

/// qdd = M^-1 (tau_applied - C dq - G - F_r + J^T F_ext + offset).
/// Throws SingularMassMatrix if M is numerically singular.
Vec3 plant_accel(const ArmParams& params, const JointState& state,
                 const ActuatorSignal& actuator,
                 const DisturbanceProfile& dist, double t);

/// Total disturbance as the residual of the nominal subsystem:
///   f = qdd - m_bar^-1 (-c_bar dq - g_bar) - m_bar^-1 kd_bar dq_d.
Vec3 ground_truth_f(const ArmParams& params, const InnerLoopConfig& cfg,
                    const JointState& state, const Vec3& cmd_dq_d,
                    const NominalModel& nominal, const Vec3& measured_accel);

/// The true arm with its firmware inner loop. Commands are held between
/// calls to command() (zero-order hold); advance() integrates with RK4.
class ClosedArchitectureArm final : public KinematicPort {
 public:
  ClosedArchitectureArm(const ArmParams& params, const InnerLoopConfig& inner,
                        const DisturbanceProfile& dist,
                        const JointState& initial, double physics_dt);
  ~ClosedArchitectureArm() override;
  ClosedArchitectureArm(ClosedArchitectureArm&&) noexcept;
  ClosedArchitectureArm& operator=(ClosedArchitectureArm&&) noexcept;

  JointState measure() const override;
  void command(const Vec3& q_d, const Vec3& dq_d) override;

  /// Integrate forward by `duration` in physics_dt steps.
  void advance(double duration);
  double time() const;

 private:
  friend class GroundTruthProbe;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Read-only oracle access to the plant's hidden quantities. Only the
/// harness (for traces and oracle filter variants) and tests use this.
class GroundTruthProbe {
 public:
  explicit GroundTruthProbe(const ClosedArchitectureArm& arm) : arm_(arm) {}

  /// True joint acceleration at the current state if dq_d were commanded
  /// (q_d as currently held).
  Vec3 acceleration_for(const Vec3& dq_d) const;

  /// f(u) = f0 + D u at the current state; returns (f0, D).
  std::pair<Vec3, Mat3> affine_f(const NominalModel& nominal) const;

  Vec3 total_disturbance(const NominalModel& nominal, const Vec3& dq_d) const;
  double mechanical_energy() const;
  const ArmParams& true_params() const;

 private:
  const ClosedArchitectureArm& arm_;
};

}  // namespace armsafe
