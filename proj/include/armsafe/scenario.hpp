#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "armsafe/arm_dynamics.hpp"
#include "armsafe/nominal_model.hpp"
#include "armsafe/plant.hpp"
#include "armsafe/robust_cbf.hpp"
#include "armsafe/tracking.hpp"

namespace armsafe {

enum class FilterVariant {
  none,
  cbf_nominal,     // f_hat = 0, no bound
  rcbf_eso,        // ESO f_hat, no bound
  rcbf_eso_bound,  // ESO f_hat with Gamma
  dob_cbf,         // DOB estimate of b_e, no bound
  dob_cbf_bound,   // DOB with b_h / k_b
  cbf_true_f,      // exact affine f(u) from the plant oracle
};

std::string_view to_string(FilterVariant v);
/// Throws ConfigError for an unknown name.
FilterVariant filter_from_string(std::string_view s);
std::string_view to_string(PsiVariant v);
PsiVariant psi_from_string(std::string_view s);
std::string_view to_string(WallDirection d);
WallDirection direction_from_string(std::string_view s);

/// Wall geometry. The use_f_hat / use_error_bound flags of SafetySpec are
/// derived from the filter variant at run time.
struct WallSpec {
  int axis = 1;
  double offset = -0.1;
  WallDirection direction = WallDirection::keep_above;
  double gamma = 10.0;
};

struct Scenario {
  std::string name;
  std::string description;

  ArmParams arm;
  InnerLoopConfig inner;
  NominalModel nominal;
  /// Multiplies nominal.kd_bar at run time (gain-robustness sweeps).
  double kd_scale = 1.0;
  TrackingGains tracking;
  ReferenceProfile reference;
  Vec3 eso_bandwidths{80.0, 80.0, 80.0};
  std::optional<WallSpec> safety;
  DisturbanceProfile disturbances;

  double duration = 10.0;
  double physics_dt = 1e-4;
  double control_dt = 1e-3;
  FilterVariant filter = FilterVariant::none;
  /// Replace the ESO estimate by the exact total disturbance.
  bool oracle_disturbance = false;
  /// q(0) = q*(0) + initial_offset, dq(0) = dq*(0).
  Vec3 initial_offset = Vec3::Zero();

  /// Rate bound l_f per joint used for Gamma.
  Vec3 l_f = Vec3::Zero();
  /// Sample time the bound is evaluated at.
  double bound_t_s = 1e-4;
  /// Measure l_f (and b_h) from the closed loop before the final run.
  bool calibrate_bounds = true;
  /// Rates are measured from this time on, past the observer start-up
  /// transient that the steady-state bound does not cover.
  double rate_window_start = 0.2;

  double dob_k_b = 40.0;
  double dob_b_h = 0.0;

  std::optional<InputBox> u_box;

  double steady_start = 5.0;
  double transient_threshold = 0.05;

  /// Throws InvalidParameter / InvalidModel on inconsistent settings.
  void validate() const;
  NominalModel effective_nominal() const;
  SafetySpec safety_spec(const Vec3& gamma_bound) const;
  bool uses_error_bound() const {
    return filter == FilterVariant::rcbf_eso_bound ||
           filter == FilterVariant::dob_cbf_bound;
  }
  bool uses_dob() const {
    return filter == FilterVariant::dob_cbf ||
           filter == FilterVariant::dob_cbf_bound;
  }
  /// Number of control samples, duration / control_dt.
  long samples() const;
};

/// A named parameter sweep over one dotted key of a base scenario.
struct SweepSpec {
  std::string name;
  std::string description;
  std::string base;
  std::string key;
  std::vector<double> values;
  /// Values that are executed and reported but not asserted on.
  std::vector<double> reported_only;
};

std::vector<Scenario> builtin_scenarios();
/// Throws ConfigError for unknown names.
Scenario find_scenario(std::string_view name);
std::vector<SweepSpec> builtin_sweeps();

}  // namespace armsafe
