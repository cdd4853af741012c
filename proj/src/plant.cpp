#include "armsafe/plant.hpp"

#include <cmath>
#include <numbers>

#include "armsafe/errors.hpp"
#include "armsafe/rk4.hpp"

namespace armsafe {

void InnerLoopConfig::validate() const {
  if (kp.minCoeff() < 0.0) throw InvalidParameter("inner loop kp must be >= 0");
  if (kd.minCoeff() <= 0.0) throw InvalidParameter("inner loop kd must be > 0");
  if (integral_gain.minCoeff() < 0.0) {
    throw InvalidParameter("inner loop integral gain must be >= 0");
  }
  if (!(integral_clamp > 0.0)) {
    throw InvalidParameter("integral clamp must be > 0");
  }
}

Vec3 TimeSignal::operator()(double t) const {
  if (t < t_on || t >= t_off) return Vec3::Zero();
  Vec3 out = constant;
  for (int i = 0; i < 3; ++i) {
    if (amplitude[i] != 0.0) {
      out[i] += amplitude[i] * std::sin(frequency[i] * t + phase[i]);
    }
  }
  if (rise_time > 0.0 && t - t_on < rise_time) {
    out *= 0.5 * (1.0 - std::cos(std::numbers::pi * (t - t_on) / rise_time));
  }
  return out;
}

Vec3 inner_loop_output(const InnerLoopConfig& cfg, const JointState& meas,
                       const Vec3& cmd_q_d, const Vec3& cmd_dq_d,
                       const Vec3& integ, const ArmParams& params) {
  Vec3 out = -cfg.kp.cwiseProduct(meas.q - cmd_q_d) -
             cfg.kd.cwiseProduct(meas.dq - cmd_dq_d);
  switch (cfg.psi_variant) {
    case PsiVariant::pd_only:
      break;
    case PsiVariant::pd_plus_integral:
      out -= cfg.integral_gain.cwiseProduct(integ);
      break;
    case PsiVariant::pd_plus_gravity_comp: {
      // The firmware knows the bare arm, not whatever payload is attached.
      ArmParams bare = params;
      bare.payload_mass = 0.0;
      Vec3 g = gravity_vector(bare, meas.q);
      if (cfg.voltage_mode) g = g.cwiseQuotient(params.torque_map_B);
      out += g;
      break;
    }
  }
  return out;
}

Vec3 applied_torque(const ArmParams& params, const JointState& state,
                    const ActuatorSignal& actuator,
                    const DisturbanceProfile& dist, double t) {
  Vec3 tau = actuator.is_voltage
                 ? Vec3(params.torque_map_B.cwiseProduct(actuator.value))
                 : actuator.value;
  if (!dist.joint_offset.is_zero()) {
    const Vec3 off = dist.joint_offset(t);
    tau += dist.joint_offset_in_volts ? Vec3(params.torque_map_B.cwiseProduct(off))
                                      : off;
  }
  if (!dist.force.is_zero()) {
    tau += jacobian(params, state.q).transpose() * dist.force(t);
  }
  return tau;
}

Vec3 plant_accel(const ArmParams& params, const JointState& state,
                 const ActuatorSignal& actuator,
                 const DisturbanceProfile& dist, double t) {
  const Mat3 m = mass_matrix(params, state.q);
  const Vec3 rhs = applied_torque(params, state, actuator, dist, t) -
                   coriolis_matrix(params, state.q, state.dq) * state.dq -
                   gravity_vector(params, state.q) -
                   friction_torque(params, state.dq);
  const Eigen::LLT<Mat3> llt(m);
  const Vec3 l_diag = llt.matrixL().toDenseMatrix().diagonal();
  // cond(M) ~ (max L_ii / min L_ii)^2 for a 3x3 Cholesky factor.
  if (llt.info() != Eigen::Success || !(l_diag.minCoeff() > 0.0) ||
      std::pow(l_diag.maxCoeff() / l_diag.minCoeff(), 2) > 1e12) {
    throw SingularMassMatrix("mass matrix is numerically singular");
  }
  return llt.solve(rhs);
}

Vec3 ground_truth_f(const ArmParams& /*params*/, const InnerLoopConfig& /*cfg*/,
                    const JointState& state, const Vec3& cmd_dq_d,
                    const NominalModel& nominal, const Vec3& measured_accel) {
  return measured_accel - nominal.drift(state.dq) -
         nominal.input_gain() * cmd_dq_d;
}

// --------------------------------------------------------------------------

struct ClosedArchitectureArm::Impl {
  using State = Eigen::Matrix<double, 9, 1>;

  ArmParams params;
  InnerLoopConfig inner;
  DisturbanceProfile dist;
  double dt;
  State x = State::Zero();  // q, dq, integral of (q - q_d)
  Vec3 q_d = Vec3::Zero();
  Vec3 dq_d = Vec3::Zero();
  long long steps = 0;

  static JointState joints(const State& s) {
    return {s.segment<3>(0), s.segment<3>(3)};
  }

  double now() const { return static_cast<double>(steps) * dt; }

  Vec3 actuator(const JointState& s, const Vec3& integ, const Vec3& cmd_dq_d) const {
    return inner_loop_output(inner, s, q_d, cmd_dq_d, integ, params);
  }

  Vec3 accel(double t, const State& s, const Vec3& cmd_dq_d) const {
    const JointState js = joints(s);
    const ActuatorSignal act{actuator(js, s.segment<3>(6), cmd_dq_d),
                             inner.voltage_mode};
    return plant_accel(params, js, act, dist, t);
  }

  State derivative(double t, const State& s) const {
    State ds;
    ds.segment<3>(0) = s.segment<3>(3);
    ds.segment<3>(3) = accel(t, s, dq_d);
    if (inner.psi_variant == PsiVariant::pd_plus_integral) {
      ds.segment<3>(6) = s.segment<3>(0) - q_d;
    } else {
      ds.segment<3>(6).setZero();
    }
    return ds;
  }

  void step() {
    const auto f = [this](double t, const State& s) { return derivative(t, s); };
    x = rk4_step(f, now(), x, dt);
    const double c = inner.integral_clamp;
    x.segment<3>(6) = x.segment<3>(6).cwiseMax(-c).cwiseMin(c);
    ++steps;
  }
};

ClosedArchitectureArm::ClosedArchitectureArm(const ArmParams& params,
                                             const InnerLoopConfig& inner,
                                             const DisturbanceProfile& dist,
                                             const JointState& initial,
                                             double physics_dt)
    : impl_(std::make_unique<Impl>()) {
  params.validate();
  inner.validate();
  if (!(physics_dt > 0.0)) throw InvalidParameter("physics_dt must be > 0");
  if (!initial.finite()) throw InvalidParameter("initial state must be finite");
  impl_->params = params;
  impl_->params.payload_mass = dist.payload_mass;
  impl_->params.validate();
  impl_->inner = inner;
  impl_->dist = dist;
  impl_->dt = physics_dt;
  impl_->x.segment<3>(0) = initial.q;
  impl_->x.segment<3>(3) = initial.dq;
  impl_->q_d = initial.q;
}

ClosedArchitectureArm::~ClosedArchitectureArm() = default;
ClosedArchitectureArm::ClosedArchitectureArm(ClosedArchitectureArm&&) noexcept =
    default;
ClosedArchitectureArm& ClosedArchitectureArm::operator=(
    ClosedArchitectureArm&&) noexcept = default;

JointState ClosedArchitectureArm::measure() const {
  return Impl::joints(impl_->x);
}

void ClosedArchitectureArm::command(const Vec3& q_d, const Vec3& dq_d) {
  impl_->q_d = q_d;
  impl_->dq_d = dq_d;
}

void ClosedArchitectureArm::advance(double duration) {
  const auto n = static_cast<long long>(std::llround(duration / impl_->dt));
  for (long long i = 0; i < n; ++i) impl_->step();
}

double ClosedArchitectureArm::time() const { return impl_->now(); }

// --------------------------------------------------------------------------

Vec3 GroundTruthProbe::acceleration_for(const Vec3& dq_d) const {
  const auto& im = *arm_.impl_;
  return im.accel(im.now(), im.x, dq_d);
}

Vec3 GroundTruthProbe::total_disturbance(const NominalModel& nominal,
                                         const Vec3& dq_d) const {
  const auto& im = *arm_.impl_;
  return ground_truth_f(im.params, im.inner, ClosedArchitectureArm::Impl::joints(im.x), dq_d, nominal,
                        acceleration_for(dq_d));
}

std::pair<Vec3, Mat3> GroundTruthProbe::affine_f(
    const NominalModel& nominal) const {
  const Vec3 f0 = total_disturbance(nominal, Vec3::Zero());
  Mat3 d;
  for (int j = 0; j < 3; ++j) {
    d.col(j) = total_disturbance(nominal, Vec3::Unit(j)) - f0;
  }
  return {f0, d};
}

double GroundTruthProbe::mechanical_energy() const {
  const auto& im = *arm_.impl_;
  const JointState s = ClosedArchitectureArm::Impl::joints(im.x);
  return kinetic_energy(im.params, s) + potential_energy(im.params, s.q);
}

const ArmParams& GroundTruthProbe::true_params() const {
  return arm_.impl_->params;
}

}  // namespace armsafe
