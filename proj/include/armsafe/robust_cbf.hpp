#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "armsafe/arm_dynamics.hpp"
#include "armsafe/nominal_model.hpp"

namespace armsafe {

enum class WallDirection { keep_above, keep_below };

/// Cartesian halfspace wall on one task-space axis of the wrist centre,
/// h = s (zeta_axis(q) - y0) with s = +1 for keep_above and -1 for keep_below.
struct SafetySpec {
  int axis = 1;  // 0 = x, 1 = y, 2 = z
  double offset_y0 = -0.1;
  WallDirection direction = WallDirection::keep_above;
  double gamma = 10.0;
  bool use_f_hat = true;
  bool use_error_bound = true;
  Vec3 gamma_bound = Vec3::Zero();

  void validate() const;
  double sign() const {
    return direction == WallDirection::keep_above ? 1.0 : -1.0;
  }
};

/// Coefficients of prod_j (s + gamma_j) = s^r + k_{r-1} s^{r-1} + ... + k_0,
/// stored ascending: k_coeffs[j] = k_j.
struct HocbfChain {
  int relative_degree = 0;
  std::vector<double> k_coeffs;
};

HocbfChain chain_coeffs(std::span<const double> gammas);

struct InputBox {
  Vec3 lower;
  Vec3 upper;
};

/// min ||u - u_nominal||^2  s.t.  a_row u >= b_rhs  (and u in u_box).
struct SafetyQp {
  Vec3 u_nominal = Vec3::Zero();
  RowVec3 a_row = RowVec3::Zero();
  double b_rhs = 0.0;
  std::optional<InputBox> u_box;
};

/// Constraint a_row u >= b_rhs plus the diagnostics it was built from.
struct CbfConstraint {
  RowVec3 a_row = RowVec3::Zero();
  double b_rhs = 0.0;
  double h = 0.0;
  double h_dot = 0.0;
  /// Known part of hdd that does not depend on u:
  /// s (Jdot_c dq + J_c m_bar^-1 (-c_bar dq - g_bar)).
  double drift = 0.0;
  /// |a_row| is too small for the constraint to act on u.
  bool degenerate = false;
};

/// Below this norm of a_row the constraint is treated as degenerate.
inline constexpr double kDegenerateRowNorm = 1e-9;

/// Relative-degree-two wall constraint with disturbance compensation:
///   a = s J_c m_bar^-1 kd_bar
///   b = -[ s (Jdot_c dq + J_c F + J_c f_hat) - |s J_c| Gamma + k1 hdot + k0 h ]
/// f_hat is ignored unless spec.use_f_hat; Gamma only with use_error_bound.
CbfConstraint cbf_constraint(const SafetySpec& spec, const ArmParams& kinematics,
                             const NominalModel& nominal,
                             const JointState& meas, const Vec3& f_hat);

/// Exact solution. Closed form without a box; otherwise enumeration of the
/// active sets of the box faces and the halfspace. Throws InfeasibleQp or
/// DegenerateConstraint.
Vec3 solve_safety_qp(const SafetyQp& qp);

/// Constraint projected on joint i with the others held at u_nominal.
struct ControlBound {
  double value = 0.0;
  bool is_lower = true;
};

/// std::nullopt marks |a_i| < 1e-12 (no bound on that joint).
std::array<std::optional<ControlBound>, 3> control_bounds(
    const RowVec3& a_row, double b_rhs, const Vec3& u_nominal);

/// Disturbance observer acting on the h dynamics hdd = a_e + b_e:
///   b_hat = k_b hdot - chi,   chi' = k_b (a_e + b_hat).
struct DobState {
  double k_b = 40.0;
  double chi = 0.0;
  double b_hat_e = 0.0;
  /// Bound on |d b_e / dt|; steady-state error bound is b_h / k_b.
  double b_h = 0.0;
};

/// Consistent start with b_hat_e = 0 at the given hdot.
DobState dob_init(double k_b, double b_h, double h_dot);

/// Explicit-Euler step; throws StepSizeFault when k_b dt >= 0.5.
DobState dob_step(const DobState& dob, double a_e, double h_dot, double dt);

/// b_hat_e read at the current hdot, k_b hdot - chi.
double dob_estimate(const DobState& dob, double h_dot);

/// Same chain as cbf_constraint with J_c f_hat - |J_c| Gamma replaced by
/// dob_estimate(dob, known.h_dot) - b_h / k_b (the bound term only with
/// spec.use_error_bound).
/// `known` supplies a_row, drift, h and hdot from cbf_constraint.
CbfConstraint dob_cbf_constraint(const SafetySpec& spec, const DobState& dob,
                                 const CbfConstraint& known);

}  // namespace armsafe
