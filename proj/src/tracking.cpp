#include "armsafe/tracking.hpp"

#include <cmath>
#include <numbers>

#include "armsafe/errors.hpp"

namespace armsafe {

void TrackingGains::validate() const {
  if (kp.minCoeff() <= 0.0 || kd.minCoeff() <= 0.0) {
    throw InvalidParameter("tracking gains must be > 0");
  }
}

ReferenceProfile ReferenceProfile::sim() {
  ReferenceProfile p;
  p.kind = ProfileKind::sim_profile;
  p.amplitude = {0.5, 0.25, 0.25};
  p.frequency = {1.0, 2.0, 2.0};
  p.offset = {0.0, 0.5, std::numbers::pi / 2.0};
  return p;
}

ReferenceProfile ReferenceProfile::hw() {
  ReferenceProfile p = sim();
  p.kind = ProfileKind::hw_profile;
  p.offset[1] = 0.534;
  return p;
}

ReferenceSample reference_at(const ReferenceProfile& profile, double t) {
  if (!(t >= 0.0)) throw InvalidParameter("reference_at: t must be >= 0");
  ReferenceSample r;
  for (int i = 0; i < 3; ++i) {
    const double a = profile.amplitude[i];
    const double w = profile.frequency[i];
    const double s = std::sin(w * t);
    const double c = std::cos(w * t);
    r.q[i] = a * s + profile.offset[i];
    r.dq[i] = a * w * c;
    r.ddq[i] = -a * w * w * s;
  }
  return r;
}

Vec3 position_control_u0(const ReferenceSample& ref, const JointState& meas,
                         const TrackingGains& gains) {
  return ref.ddq + gains.kp.cwiseProduct(ref.q - meas.q) +
         gains.kd.cwiseProduct(ref.dq - meas.dq);
}

Vec3 nominal_inversion(const Vec3& u0, const NominalModel& nominal,
                       const Vec3& dq) {
  if (!(nominal.kd_bar.cwiseAbs().minCoeff() > 0.0)) {
    throw InvalidModel("nominal_inversion: kd_bar is singular");
  }
  return (nominal.m_bar * u0 + nominal.c_bar * dq + nominal.g_bar)
      .cwiseQuotient(nominal.kd_bar);
}

Vec3 disturbance_rejection(const Vec3& qd0_dot, const Vec3& f_hat,
                           const NominalModel& nominal) {
  return qd0_dot - nominal.inverse_gain() * f_hat;
}

const Vec3& CommandIntegrator::push(const Vec3& dq_d, double dt) {
  if (primed_) q_d_ += 0.5 * dt * (last_ + dq_d);
  last_ = dq_d;
  primed_ = true;
  return q_d_;
}

}  // namespace armsafe
