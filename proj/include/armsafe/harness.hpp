#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "armsafe/scenario.hpp"

namespace armsafe {

/// One control sample. Optional fields are empty when undefined (no safety
/// filter, or a joint whose constraint coefficient vanishes).
struct TraceRow {
  double t = 0.0;
  Vec3 q = Vec3::Zero();
  Vec3 dq = Vec3::Zero();
  Vec3 q_ref = Vec3::Zero();
  Vec3 dq_d = Vec3::Zero();    // pre-filter velocity command
  Vec3 u_safe = Vec3::Zero();  // command actually sent
  Vec3 f_true = Vec3::Zero();
  Vec3 f_hat = Vec3::Zero();
  std::optional<double> h;
  std::optional<double> h_dot;
  std::optional<double> slack;  // a u_safe - b
  std::array<std::optional<double>, 3> bound;
};

struct Trace {
  std::vector<TraceRow> rows;
};

struct Metrics {
  Vec3 joint_rmse = Vec3::Zero();
  Vec3 cartesian_rmse = Vec3::Zero();
  std::optional<double> min_h;
  std::optional<double> transient_time;
  double intervention_fraction = 0.0;
};

/// Per-joint max |df_true| / control_dt and max |d(s J_c f_true)| / control_dt.
struct RateBounds {
  Vec3 l_f = Vec3::Zero();
  double b_h = 0.0;
};

/// Extra per-run outputs that are not part of the trace columns.
struct RunDiagnostics {
  Vec3 gamma_bound = Vec3::Zero();
  double dob_bound = 0.0;
  long degenerate_steps = 0;
  /// Rate bounds measured on the returned trace (filled by run_scenario).
  RateBounds measured;
};

/// Deterministic co-simulation: RK4 plant at physics_dt, outer loop at
/// control_dt with zero-order hold. Faults from inside the loop are
/// rethrown as RuntimeFault carrying the sample time.
Trace run(const Scenario& scn, RunDiagnostics* diag = nullptr);

/// Metrics over [steady_start, end] (RMSE) and the whole horizon (min_h).
/// `kinematics` supplies forward kinematics for the Cartesian error.
Metrics metrics(const Trace& trace, const ArmParams& kinematics,
                double steady_start, double transient_threshold = 0.05);

/// Measured on one trace, over samples from scn.rate_window_start on.
RateBounds measure_rate_bounds(const Scenario& scn, const Trace& trace);

/// Closed-loop fixed point for the bound variants: run, measure the rate
/// bounds, and re-run with 10% headroom until the bound in use covers what
/// the run produced. Returns the scenario with l_f and dob_b_h filled in.
Scenario calibrate_rate_bounds(Scenario scn, int max_iterations = 8);

/// Calibrate when the scenario asks for it, then run.
struct Outcome {
  Scenario scenario;  // as actually run
  Trace trace;
  Metrics metrics;
  RunDiagnostics diag;
};
Outcome run_scenario(const Scenario& scn);

/// Per-sample control bounds along one run of the base scenario. All three
/// share the nominal a-row; they differ in the disturbance term: the
/// recorded true f, zero, or the ESO estimate.
struct BoundSample {
  double t = 0.0;
  std::array<std::optional<double>, 3> true_f;
  std::array<std::optional<double>, 3> nominal;
  std::array<std::optional<double>, 3> eso;
};
struct BoundTable {
  std::vector<BoundSample> samples;
  /// Per joint: sup_t |bound - true bound| for nominal and ESO.
  Vec3 sup_gap_nominal = Vec3::Zero();
  Vec3 sup_gap_eso = Vec3::Zero();
  /// Per joint: share of defined samples where the ESO bound is strictly
  /// closer to the true bound than the nominal one.
  Vec3 eso_closer_fraction = Vec3::Zero();
};
BoundTable bound_comparison(const Scenario& base);

/// Runs scenarios concurrently and returns outcomes in input order. A
/// faulting run yields its fault in `error` instead of an outcome.
struct BatchResult {
  std::optional<Outcome> outcome;
  std::string error_name;
  std::string error;
};
std::vector<BatchResult> run_batch(const std::vector<Scenario>& scenarios);

}  // namespace armsafe
