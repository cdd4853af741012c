#pragma once

#include <array>
#include <span>

#include "armsafe/types.hpp"

namespace armsafe {

/// Observer gains with a double pole at -omega_o: beta1 = 2 omega_o,
/// beta2 = omega_o^2.
struct EsoGains {
  double omega_o = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
};

/// Per-joint observer state: velocity estimate and total-disturbance estimate.
struct EsoState {
  double xhat2 = 0.0;
  double xhat3 = 0.0;
};

EsoGains gains_from_bandwidth(double omega_o);

/// One explicit-Euler step of the second-order ESO
///   xhat2' = F_i + G_i u + xhat3 + beta1 (dq_i - xhat2)
///   xhat3' = beta2 (dq_i - xhat2)
/// Throws StepSizeFault when dt * omega_o >= 0.5.
EsoState eso_step(const EsoState& state, const EsoGains& gains,
                  double nominal_drift_Fi, double nominal_gain_Gi_u,
                  double measured_dq_i, double dt);

/// Matched-pole mapping exp(-omega_o t_s) of the continuous observer pole.
double discretize_bandwidth(double omega_o, double t_s);

struct BoundSpec {
  /// Bound on |df_i/dt| for this joint.
  double l_f = 0.0;
  /// Sample time the bound is evaluated at (s).
  double t_s = 1e-4;
  /// Relative degree of the measured velocity with respect to f_i.
  int r_i = 1;
  /// Discrete observer pole, in (0, 1).
  double omega_discrete = 0.0;
};

struct ErrorBound {
  double gamma_bound = 0.0;      // Gamma_i
  long truncation_terms = 0;     // K
  double series_sum = 0.0;       // S_K = p(1) + ... + p(K)
};

/// Convolution kernel p(k), k >= 1, of the discrete estimation error:
/// p(k) = 1 for k <= r + 1, and for k >= r + 2
///   p(k) = sum_{i=1}^{r+1} (1/(i-1)!) prod_{j=1-i}^{-1}(k + j)
///                           (1 - w)^(i-1) w^(k-i).
double series_term(double omega_discrete, long k, int r_i = 1);

/// Partial sum p(1) + ... + p(k_max), summed in order.
double series_partial_sum(double omega_discrete, long k_max, int r_i = 1);

/// Gamma_i = (sum_k p(k)) l_f t_s. The series is truncated once the
/// ratio-test tail majorant p(K+1) / (1 - p(K+1)/p(K)) drops below 1e-12 of
/// the partial sum. Throws DivergentSeries unless 0 < omega_discrete < 1.
ErrorBound estimation_error_bound(const BoundSpec& spec);

/// Gamma per joint from continuous bandwidths, the bound sample time and
/// per-joint rate bounds.
Vec3 error_bound_per_joint(const Vec3& omega_o, double t_s, const Vec3& l_f);

/// max_k |x(k+1) - x(k)| / t_s over a uniformly sampled signal.
double rate_bound_from_samples(std::span<const double> samples, double t_s);

/// Three independent joint observers sharing the nominal model inputs.
class EsoBank {
 public:
  explicit EsoBank(const Vec3& omega_o);

  void reset(const Vec3& dq);
  /// Advance each joint with F = nominal drift, Gu = nominal gain * u.
  void update(const Vec3& drift, const Vec3& gain_times_u, const Vec3& dq,
              double dt);

  Vec3 f_hat() const;
  Vec3 velocity_estimate() const;
  const std::array<EsoGains, 3>& gains() const { return gains_; }

 private:
  std::array<EsoGains, 3> gains_;
  std::array<EsoState, 3> states_;
};

}  // namespace armsafe
