#pragma once

#include "armsafe/types.hpp"

namespace armsafe {

// Kinematic convention for the 3-DOF waist-shoulder-elbow arm.
//
// The task frame has its origin at the shoulder joint centre with z pointing
// up. The waist joint q1 rotates the whole arm about z. The arm plane is
// offset laterally from the waist axis by link_lengths[0] (along the local +y
// axis). Inside the arm plane, q2 is the elevation of the upper arm above
// the horizontal and q3 is the elbow flexion, so the forearm elevation is
// q2 - q3. With rho the horizontal reach and z the height of a point,
//
//   rho = L2 cos(q2) + L3 cos(q2 - q3)
//   z   = L2 sin(q2) + L3 sin(q2 - q3)
//   p   = [rho cos(q1) - d sin(q1),  rho sin(q1) + d cos(q1),  z]
//
// At q = 0 the arm is fully stretched along +x: p = [L2 + L3, d, 0], which is
// also the elbow singularity. Gravity acts along -z with magnitude
// gravity_accel.
struct ArmParams {
  /// [lateral shoulder offset d, upper arm L2, forearm L3 to wrist centre] (m)
  Vec3 link_lengths{0.08, 0.432, 0.25};
  /// Centre-of-mass distance along each link (m). Link 1's COM lies on the
  /// waist axis, so its entry only documents the geometry.
  Vec3 com_offsets{0.0, 0.20, 0.12};
  Vec3 masses{10.0, 15.0, 5.0};
  /// Rotational inertia of each link about its COM (kg m^2). Link 1 only
  /// spins about the waist axis; links 2 and 3 are treated as isotropic.
  Vec3 link_inertias{1.5, 0.25, 0.05};
  /// Motor rotor inertia reflected through the gearing, J_m G^2, added to
  /// the diagonal of M. Defaults follow the PUMA 560 figures
  /// (J_m = 2e-4 kg m^2, G = 62.6, 107.8, 53.7).
  Vec3 rotor_inertias{0.784, 2.325, 0.577};
  double gravity_accel = 9.81;
  Vec3 viscous_friction = Vec3::Zero();
  Vec3 coulomb_friction = Vec3::Zero();
  /// Velocity scale of the tanh-smoothed Coulomb term (rad/s).
  double coulomb_smoothing = 0.05;
  /// Point mass rigidly attached at the wrist centre (kg).
  double payload_mass = 0.0;
  /// Diagonal voltage-to-torque map used when the inner loop outputs volts.
  Vec3 torque_map_B{18.0, 44.0, 9.0};

  /// PUMA-scale defaults. These numbers are plausible, not measured.
  static ArmParams puma_like() { return {}; }

  /// Throws InvalidParameter when an invariant is violated.
  void validate() const;
};

Mat3 mass_matrix(const ArmParams& params, const Vec3& q);

/// Christoffel-symbol Coriolis matrix, so that dM/dt - 2C is skew-symmetric.
Mat3 coriolis_matrix(const ArmParams& params, const Vec3& q, const Vec3& dq);

/// Gradient of the potential energy (payload included).
Vec3 gravity_vector(const ArmParams& params, const Vec3& q);

/// viscous * dq + coulomb * tanh(dq / coulomb_smoothing), per joint.
Vec3 friction_torque(const ArmParams& params, const Vec3& dq);

/// Wrist-centre position in the task frame.
Vec3 forward_kinematics(const ArmParams& params, const Vec3& q);

/// Position Jacobian d(forward_kinematics)/dq.
Mat3 jacobian(const ArmParams& params, const Vec3& q);

/// Time derivative of one Jacobian row along dq: (dJ_axis/dq) dq.
RowVec3 jacobian_row_rate(const ArmParams& params, const Vec3& q,
                          const Vec3& dq, int axis);

/// Full time derivative of the Jacobian along dq.
Mat3 jacobian_rate(const ArmParams& params, const Vec3& q, const Vec3& dq);

double kinetic_energy(const ArmParams& params, const JointState& s);
double potential_energy(const ArmParams& params, const Vec3& q);

}  // namespace armsafe
