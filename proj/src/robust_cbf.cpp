#include "armsafe/robust_cbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "armsafe/errors.hpp"

namespace armsafe {

void SafetySpec::validate() const {
  if (axis < 0 || axis > 2) throw InvalidParameter("safety axis must be 0..2");
  if (!(gamma > 0.0)) throw InvalidParameter("safety gamma must be > 0");
  if (use_error_bound && !use_f_hat) {
    throw InvalidParameter("use_error_bound requires use_f_hat");
  }
  if (!(gamma_bound.minCoeff() >= 0.0) || !gamma_bound.allFinite()) {
    throw InvalidParameter("gamma_bound entries must be finite and >= 0");
  }
  if (!std::isfinite(offset_y0)) throw InvalidParameter("wall offset must be finite");
}

HocbfChain chain_coeffs(std::span<const double> gammas) {
  if (gammas.empty()) throw InvalidParameter("chain_coeffs: need r >= 1");
  // poly[j] is the coefficient of s^j; start from the constant 1.
  std::vector<double> poly{1.0};
  for (double g : gammas) {
    if (!(g > 0.0)) throw InvalidParameter("chain_coeffs: gammas must be > 0");
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      next[j] += g * poly[j];
      next[j + 1] += poly[j];
    }
    poly = std::move(next);
  }
  HocbfChain chain;
  chain.relative_degree = static_cast<int>(gammas.size());
  chain.k_coeffs.assign(poly.begin(), poly.end() - 1);  // drop leading 1
  return chain;
}

CbfConstraint cbf_constraint(const SafetySpec& spec, const ArmParams& kinematics,
                             const NominalModel& nominal,
                             const JointState& meas, const Vec3& f_hat) {
  const double s = spec.sign();
  const int ax = spec.axis;
  const RowVec3 jc = jacobian(kinematics, meas.q).row(ax);
  const RowVec3 jc_rate = jacobian_row_rate(kinematics, meas.q, meas.dq, ax);
  const double gammas[2] = {spec.gamma, spec.gamma};
  const HocbfChain chain = chain_coeffs(gammas);
  const double k0 = chain.k_coeffs[0];
  const double k1 = chain.k_coeffs[1];

  CbfConstraint c;
  c.h = s * (forward_kinematics(kinematics, meas.q)[ax] - spec.offset_y0);
  c.h_dot = s * jc.dot(meas.dq);
  c.drift = s * (jc_rate.dot(meas.dq) + jc.dot(nominal.drift(meas.dq)));
  c.a_row = s * jc * nominal.input_gain();
  double comp = 0.0;
  if (spec.use_f_hat) comp += s * jc.dot(f_hat);
  if (spec.use_error_bound) comp -= jc.cwiseAbs().dot(spec.gamma_bound);
  c.b_rhs = -(c.drift + comp + k1 * c.h_dot + k0 * c.h);
  c.degenerate = c.a_row.norm() < kDegenerateRowNorm;
  return c;
}

namespace {

Vec3 solve_unboxed(const SafetyQp& qp) {
  const double slack = qp.a_row.dot(qp.u_nominal) - qp.b_rhs;
  if (slack >= 0.0) return qp.u_nominal;
  const double nrm2 = qp.a_row.squaredNorm();
  if (nrm2 == 0.0) {
    throw DegenerateConstraint("safety QP: a_row = 0 and constraint violated");
  }
  return qp.u_nominal + qp.a_row.transpose() * (-slack / nrm2);
}

Vec3 solve_boxed(const SafetyQp& qp) {
  const Vec3& lo = qp.u_box->lower;
  const Vec3& hi = qp.u_box->upper;
  const RowVec3& a = qp.a_row;
  const Vec3& un = qp.u_nominal;
  if ((lo.array() > hi.array()).any()) {
    throw InvalidParameter("safety QP: box lower bound exceeds upper bound");
  }

  double best_reach = 0.0;
  for (int i = 0; i < 3; ++i) best_reach += std::max(a[i] * lo[i], a[i] * hi[i]);
  if (best_reach < qp.b_rhs) {
    if (a.isZero()) {
      throw DegenerateConstraint("safety QP: a_row = 0 and constraint violated");
    }
    throw InfeasibleQp("safety QP: halfspace does not intersect the input box",
                       qp.b_rhs - best_reach);
  }

  const double scale = 1.0 + std::abs(qp.b_rhs) + a.cwiseAbs().sum() *
                                                      (1.0 + un.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  const auto feasible = [&](const Vec3& u) {
    return (u.array() >= lo.array() - tol).all() &&
           (u.array() <= hi.array() + tol).all() && a.dot(u) >= qp.b_rhs - tol;
  };

  // Halfspace inactive: the box projection is separable.
  const Vec3 clamped = un.cwiseMax(lo).cwiseMin(hi);
  if (a.dot(clamped) >= qp.b_rhs) return clamped;

  // Halfspace active: each joint is free, at its lower or at its upper bound.
  Vec3 best = clamped;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int pattern = 0; pattern < 27; ++pattern) {
    int code = pattern;
    Vec3 u = un;
    std::array<bool, 3> free{};
    double fixed_part = 0.0;
    double free_norm2 = 0.0;
    double free_nominal = 0.0;
    for (int i = 0; i < 3; ++i, code /= 3) {
      const int which = code % 3;
      free[i] = which == 0;
      if (which == 1) u[i] = lo[i];
      if (which == 2) u[i] = hi[i];
      if (free[i]) {
        free_norm2 += a[i] * a[i];
        free_nominal += a[i] * un[i];
      } else {
        fixed_part += a[i] * u[i];
      }
    }
    if (free_norm2 == 0.0) {
      if (std::abs(fixed_part - qp.b_rhs) > tol) continue;
    } else {
      const double lambda = (qp.b_rhs - fixed_part - free_nominal) / free_norm2;
      for (int i = 0; i < 3; ++i) {
        if (free[i]) u[i] = un[i] + lambda * a[i];
      }
    }
    if (!feasible(u)) continue;
    const double cost = (u - un).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = u;
    }
  }
  if (!std::isfinite(best_cost)) {
    // Unreachable for a non-empty feasible set; keep the failure loud.
    throw InfeasibleQp("safety QP: no feasible active set found", 0.0);
  }
  return best.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

Vec3 solve_safety_qp(const SafetyQp& qp) {
  if (!qp.u_nominal.allFinite() || !qp.a_row.allFinite() ||
      !std::isfinite(qp.b_rhs)) {
    throw InvalidParameter("safety QP: non-finite coefficients");
  }
  return qp.u_box ? solve_boxed(qp) : solve_unboxed(qp);
}

std::array<std::optional<ControlBound>, 3> control_bounds(
    const RowVec3& a_row, double b_rhs, const Vec3& u_nominal) {
  std::array<std::optional<ControlBound>, 3> out;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(a_row[i]) < 1e-12) continue;
    double rest = 0.0;
    for (int j = 0; j < 3; ++j) {
      if (j != i) rest += a_row[j] * u_nominal[j];
    }
    out[i] = ControlBound{(b_rhs - rest) / a_row[i], a_row[i] > 0.0};
  }
  return out;
}

DobState dob_init(double k_b, double b_h, double h_dot) {
  if (!(k_b > 0.0)) throw InvalidParameter("DOB gain k_b must be > 0");
  if (!(b_h >= 0.0)) throw InvalidParameter("DOB rate bound b_h must be >= 0");
  return {k_b, k_b * h_dot, 0.0, b_h};
}

DobState dob_step(const DobState& dob, double a_e, double h_dot, double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("dob_step: dt must be > 0");
  if (!(dob.k_b > 0.0)) throw InvalidParameter("dob_step: k_b must be > 0");
  if (dob.k_b * dt >= 0.5) {
    throw StepSizeFault("dob_step: k_b * dt must be < 0.5");
  }
  DobState next = dob;
  const double b_hat = dob.k_b * h_dot - dob.chi;
  next.chi = dob.chi + dt * dob.k_b * (a_e + b_hat);
  next.b_hat_e = dob.k_b * h_dot - next.chi;
  return next;
}

double dob_estimate(const DobState& dob, double h_dot) {
  return dob.k_b * h_dot - dob.chi;
}

CbfConstraint dob_cbf_constraint(const SafetySpec& spec, const DobState& dob,
                                 const CbfConstraint& known) {
  const double gammas[2] = {spec.gamma, spec.gamma};
  const HocbfChain chain = chain_coeffs(gammas);
  CbfConstraint c = known;
  double comp = 0.0;
  if (spec.use_f_hat) comp += dob_estimate(dob, known.h_dot);
  if (spec.use_error_bound) comp -= dob.b_h / dob.k_b;
  c.b_rhs = -(known.drift + comp + chain.k_coeffs[1] * known.h_dot +
              chain.k_coeffs[0] * known.h);
  return c;
}

}  // namespace armsafe
