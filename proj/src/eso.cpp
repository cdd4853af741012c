#include "armsafe/eso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "armsafe/errors.hpp"

namespace armsafe {

EsoGains gains_from_bandwidth(double omega_o) {
  if (!(omega_o > 0.0) || !std::isfinite(omega_o)) {
    throw InvalidParameter("observer bandwidth must be > 0");
  }
  return {omega_o, 2.0 * omega_o, omega_o * omega_o};
}

EsoState eso_step(const EsoState& state, const EsoGains& gains,
                  double nominal_drift_Fi, double nominal_gain_Gi_u,
                  double measured_dq_i, double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("eso_step: dt must be > 0");
  if (dt * gains.omega_o >= 0.5) {
    throw StepSizeFault("eso_step: dt * omega_o must be < 0.5");
  }
  const double e = measured_dq_i - state.xhat2;
  EsoState next;
  next.xhat2 = state.xhat2 + dt * (nominal_drift_Fi + nominal_gain_Gi_u +
                                   state.xhat3 + gains.beta1 * e);
  next.xhat3 = state.xhat3 + dt * gains.beta2 * e;
  return next;
}

double discretize_bandwidth(double omega_o, double t_s) {
  if (!(omega_o > 0.0) || !(t_s > 0.0)) {
    throw InvalidParameter("discretize_bandwidth: omega_o and t_s must be > 0");
  }
  // Underflow to 0 for omega_o * t_s > ~745 is accepted.
  return std::exp(-omega_o * t_s);
}

double series_term(double w, long k, int r_i) {
  if (k < 1) throw InvalidParameter("series_term: k must be >= 1");
  if (r_i < 1) throw InvalidParameter("series_term: r_i must be >= 1");
  if (k <= r_i + 1) return 1.0;
  double sum = 0.0;
  double factorial = 1.0;  // (i-1)!
  for (int i = 1; i <= r_i + 1; ++i) {
    if (i > 1) factorial *= static_cast<double>(i - 1);
    double prod = 1.0;  // prod_{j=1-i}^{-1} (k + j), empty for i = 1
    for (int j = 1 - i; j <= -1; ++j) prod *= static_cast<double>(k + j);
    sum += prod / factorial * std::pow(1.0 - w, i - 1) *
           std::pow(w, static_cast<double>(k - i));
  }
  return sum;
}

double series_partial_sum(double w, long k_max, int r_i) {
  double s = 0.0;
  for (long k = 1; k <= k_max; ++k) s += series_term(w, k, r_i);
  return s;
}

ErrorBound estimation_error_bound(const BoundSpec& spec) {
  const double w = spec.omega_discrete;
  if (!(w > 0.0 && w < 1.0)) {
    throw DivergentSeries(
        "estimation_error_bound: omega_discrete must lie in (0, 1)");
  }
  if (!(spec.l_f >= 0.0) || !std::isfinite(spec.l_f)) {
    throw InvalidParameter("estimation_error_bound: l_f must be >= 0");
  }
  if (!(spec.t_s > 0.0)) {
    throw InvalidParameter("estimation_error_bound: t_s must be > 0");
  }
  if (spec.r_i < 1) throw InvalidParameter("estimation_error_bound: r_i >= 1");

  // Past k = r + 2 the ratio p(k+1)/p(k) decreases monotonically to w, so
  // p(K+1) / (1 - ratio) bounds the remaining tail once the ratio is < 1.
  constexpr double kTailTol = 1e-12;
  constexpr long kMaxTerms = 100'000'000;
  double sum = 0.0;
  long k = 1;
  double term = series_term(w, 1, spec.r_i);
  for (;; ++k) {
    sum += term;
    const double next = series_term(w, k + 1, spec.r_i);
    if (k >= spec.r_i + 2 && term > 0.0) {
      const double ratio = next / term;
      if (ratio < 1.0) {
        const double tail = next / (1.0 - ratio);
        if (tail < kTailTol * sum) break;
      }
    }
    if (k >= kMaxTerms) {
      throw DivergentSeries("estimation_error_bound: series did not converge");
    }
    term = next;
  }
  return {sum * spec.l_f * spec.t_s, k, sum};
}

Vec3 error_bound_per_joint(const Vec3& omega_o, double t_s, const Vec3& l_f) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    BoundSpec spec;
    spec.l_f = l_f[i];
    spec.t_s = t_s;
    spec.omega_discrete = discretize_bandwidth(omega_o[i], t_s);
    out[i] = estimation_error_bound(spec).gamma_bound;
  }
  return out;
}

double rate_bound_from_samples(std::span<const double> samples, double t_s) {
  if (!(t_s > 0.0)) throw InvalidParameter("rate bound: t_s must be > 0");
  double best = 0.0;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    best = std::max(best, std::abs(samples[k] - samples[k - 1]) / t_s);
  }
  return best;
}

EsoBank::EsoBank(const Vec3& omega_o) {
  for (int i = 0; i < 3; ++i) gains_[i] = gains_from_bandwidth(omega_o[i]);
}

void EsoBank::reset(const Vec3& dq) {
  for (int i = 0; i < 3; ++i) states_[i] = {dq[i], 0.0};
}

void EsoBank::update(const Vec3& drift, const Vec3& gain_times_u,
                     const Vec3& dq, double dt) {
  for (int i = 0; i < 3; ++i) {
    states_[i] =
        eso_step(states_[i], gains_[i], drift[i], gain_times_u[i], dq[i], dt);
  }
}

Vec3 EsoBank::f_hat() const {
  return {states_[0].xhat3, states_[1].xhat3, states_[2].xhat3};
}

Vec3 EsoBank::velocity_estimate() const {
  return {states_[0].xhat2, states_[1].xhat2, states_[2].xhat2};
}

}  // namespace armsafe
