#include "armsafe/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include "armsafe/errors.hpp"

namespace armsafe {

namespace {

template <typename E, std::size_t N>
E lookup(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
         std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  std::string msg = "unknown " + std::string(what) + " '" + std::string(s) + "' (expected";
  for (const auto& [name, value] : table) msg += " " + std::string(name);
  throw ConfigError(msg + ")");
}

template <typename E, std::size_t N>
std::string_view reverse(E v, const std::array<std::pair<std::string_view, E>, N>& table) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<std::string_view, FilterVariant>, 7> kFilters{{
    {"none", FilterVariant::none},
    {"cbf_nominal", FilterVariant::cbf_nominal},
    {"rcbf_eso", FilterVariant::rcbf_eso},
    {"rcbf_eso_bound", FilterVariant::rcbf_eso_bound},
    {"dob_cbf", FilterVariant::dob_cbf},
    {"dob_cbf_bound", FilterVariant::dob_cbf_bound},
    {"cbf_true_f", FilterVariant::cbf_true_f},
}};

constexpr std::array<std::pair<std::string_view, PsiVariant>, 3> kPsi{{
    {"pd_only", PsiVariant::pd_only},
    {"pd_plus_integral", PsiVariant::pd_plus_integral},
    {"pd_plus_gravity_comp", PsiVariant::pd_plus_gravity_comp},
}};

constexpr std::array<std::pair<std::string_view, WallDirection>, 2> kDirections{{
    {"keep_above", WallDirection::keep_above},
    {"keep_below", WallDirection::keep_below},
}};

}  // namespace

std::string_view to_string(FilterVariant v) { return reverse(v, kFilters); }
FilterVariant filter_from_string(std::string_view s) {
  return lookup(s, kFilters, "filter variant");
}
std::string_view to_string(PsiVariant v) { return reverse(v, kPsi); }
PsiVariant psi_from_string(std::string_view s) { return lookup(s, kPsi, "psi variant"); }
std::string_view to_string(WallDirection d) { return reverse(d, kDirections); }
WallDirection direction_from_string(std::string_view s) {
  return lookup(s, kDirections, "wall direction");
}

long Scenario::samples() const {
  return static_cast<long>(std::llround(duration / control_dt));
}

NominalModel Scenario::effective_nominal() const {
  NominalModel n = nominal;
  n.kd_bar *= kd_scale;
  return n;
}

SafetySpec Scenario::safety_spec(const Vec3& gamma_bound) const {
  SafetySpec spec;
  if (safety) {
    spec.axis = safety->axis;
    spec.offset_y0 = safety->offset;
    spec.direction = safety->direction;
    spec.gamma = safety->gamma;
  }
  switch (filter) {
    case FilterVariant::none:
    case FilterVariant::cbf_nominal:
      spec.use_f_hat = false;
      spec.use_error_bound = false;
      break;
    case FilterVariant::rcbf_eso:
    case FilterVariant::dob_cbf:
    case FilterVariant::cbf_true_f:
      spec.use_f_hat = true;
      spec.use_error_bound = false;
      break;
    case FilterVariant::rcbf_eso_bound:
    case FilterVariant::dob_cbf_bound:
      spec.use_f_hat = true;
      spec.use_error_bound = true;
      break;
  }
  spec.gamma_bound = spec.use_error_bound ? gamma_bound : Vec3::Zero();
  return spec;
}

void Scenario::validate() const {
  arm.validate();
  inner.validate();
  tracking.validate();
  if (!(kd_scale > 0.0)) throw InvalidParameter("kd_scale must be > 0");
  effective_nominal().validate();
  if (!(duration > 0.0)) throw InvalidParameter("duration must be > 0");
  if (!(physics_dt > 0.0) || !(control_dt > 0.0)) {
    throw InvalidParameter("physics_dt and control_dt must be > 0");
  }
  if (physics_dt > control_dt) {
    throw InvalidParameter("physics_dt must not exceed control_dt");
  }
  const double ratio = control_dt / physics_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw InvalidParameter("control_dt must be an integer multiple of physics_dt");
  }
  const double steps = duration / control_dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
    throw InvalidParameter("duration must be an integer multiple of control_dt");
  }
  if (!(eso_bandwidths.minCoeff() > 0.0) || !eso_bandwidths.allFinite()) {
    throw InvalidParameter("eso_bandwidths must be > 0");
  }
  if (control_dt * eso_bandwidths.maxCoeff() >= 0.5) {
    throw StepSizeFault("control_dt * max(eso_bandwidths) must be < 0.5");
  }
  if (filter != FilterVariant::none && !safety) {
    throw InvalidParameter("a safety filter needs a safety specification");
  }
  if (safety) safety_spec(Vec3::Zero()).validate();
  if (!(l_f.minCoeff() >= 0.0) || !l_f.allFinite()) {
    throw InvalidParameter("l_f must be finite and >= 0");
  }
  if (!(bound_t_s > 0.0)) throw InvalidParameter("bound t_s must be > 0");
  if (!(rate_window_start >= 0.0) || !(rate_window_start < duration)) {
    throw InvalidParameter("rate_window_start must lie in [0, duration)");
  }
  if (!(dob_k_b > 0.0)) throw InvalidParameter("dob k_b must be > 0");
  if (!(dob_b_h >= 0.0)) throw InvalidParameter("dob b_h must be >= 0");
  if (uses_dob() && dob_k_b * control_dt >= 0.5) {
    throw StepSizeFault("dob k_b * control_dt must be < 0.5");
  }
  if (u_box && (u_box->lower.array() > u_box->upper.array()).any()) {
    throw InvalidParameter("u_box lower bound exceeds upper bound");
  }
  if (!(steady_start >= 0.0) || !(steady_start < duration)) {
    throw InvalidParameter("steady_start must lie in [0, duration)");
  }
  if (!(transient_threshold > 0.0)) {
    throw InvalidParameter("transient_threshold must be > 0");
  }
  if (!initial_offset.allFinite()) throw InvalidParameter("initial_offset must be finite");
}

// --------------------------------------------------------------------------
// Built-in scenarios. Geometry of the reference: with q3 - q2 held near
// pi/2 the wrist centre swings through y in about [-0.17, 0.31] m and z in
// about [-0.09, 0.09] m, so both walls below are active part of the time.

namespace {

Mat3 bare_inertia_at(const ArmParams& arm, const ReferenceProfile& ref) {
  ArmParams bare = arm;
  bare.payload_mass = 0.0;
  return mass_matrix(bare, reference_at(ref, 0.0).q);
}

// Section V: torque-level PD inner loop Kp = Kd = I, gravity on, no
// friction, no external force; nominal = reduced model at q*(0).
Scenario sim_base() {
  Scenario s;
  s.reference = ReferenceProfile::sim();
  s.inner.kp = Vec3::Ones();
  s.inner.kd = Vec3::Ones();
  s.nominal = NominalModel::reduced(bare_inertia_at(s.arm, s.reference), Vec3::Ones());
  s.eso_bandwidths = Vec3::Constant(80.0);
  return s;
}

// Section VI: voltage-level PD inner loop Kp = diag(1, 12, 1), Kd = I,
// friction present, nominal kd_bar = Kd_bar * B_bar = diag(20, 40, 10).
Scenario hw_base() {
  Scenario s;
  s.reference = ReferenceProfile::hw();
  s.arm.viscous_friction = Vec3(2.0, 3.0, 1.0);
  s.arm.coulomb_friction = Vec3(1.5, 2.5, 1.0);
  s.inner.kp = Vec3(1.0, 12.0, 1.0);
  s.inner.kd = Vec3::Ones();
  s.inner.voltage_mode = true;
  s.nominal = NominalModel::reduced(bare_inertia_at(s.arm, s.reference),
                                    Vec3(20.0, 40.0, 10.0));
  s.eso_bandwidths = Vec3::Constant(80.0);
  return s;
}

WallSpec y_wall() { return WallSpec{1, -0.1, WallDirection::keep_above, 10.0}; }
WallSpec z_wall() { return WallSpec{2, -0.01, WallDirection::keep_above, 10.0}; }

}  // namespace

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;

  {
    Scenario s = sim_base();
    s.name = "sim_tracking";
    s.description = "simulated tracking, Kp = Kd = I torque inner loop, ESO 80 rad/s";
    out.push_back(s);
  }
  {
    Scenario s = sim_base();
    s.name = "sim_wall_y";
    s.description = "simulated wall y >= -0.1 m, gamma 10, robust CBF with ESO error bound";
    s.safety = y_wall();
    s.filter = FilterVariant::rcbf_eso_bound;
    out.push_back(s);
  }
  {
    Scenario s = sim_base();
    s.name = "sim_oracle";
    s.description = "perfect-model check: f_hat = f exactly, zero gravity, fine control rate";
    s.arm.gravity_accel = 0.0;
    s.oracle_disturbance = true;
    s.physics_dt = 1e-5;
    s.control_dt = 1e-5;
    out.push_back(s);
  }
  {
    Scenario s = sim_base();
    s.name = "sim_integral_inner";
    s.description = "simulated tracking with a PD plus integral inner loop";
    s.inner.psi_variant = PsiVariant::pd_plus_integral;
    s.inner.integral_gain = Vec3::Constant(0.5);
    out.push_back(s);
  }
  {
    Scenario s = hw_base();
    s.name = "hw_tracking";
    s.description = "arm tracking, voltage inner loop without gravity compensation";
    out.push_back(s);
  }
  {
    Scenario s = hw_base();
    s.name = "hw_tracking_zero_gravity";
    s.description = "arm tracking, inner loop with gravity compensation";
    s.inner.psi_variant = PsiVariant::pd_plus_gravity_comp;
    out.push_back(s);
  }
  for (double mass : {1.0, 1.5, 2.0}) {
    Scenario s = hw_base();
    const std::string tag = mass == 1.5 ? "1_5" : std::to_string(static_cast<int>(mass));
    s.name = "hw_payload_" + tag + "kg";
    s.description = "arm tracking with a " + std::string(mass == 1.5 ? "1.5" : tag) +
                    " kg payload at the wrist";
    s.disturbances.payload_mass = mass;
    out.push_back(s);
  }
  {
    Scenario s = hw_base();
    s.name = "hw_wall_y";
    s.description = "wall y >= -0.1 m with 2 kg payload, robust CBF with ESO error bound";
    s.safety = y_wall();
    s.disturbances.payload_mass = 2.0;
    s.filter = FilterVariant::rcbf_eso_bound;
    out.push_back(s);
  }
  {
    Scenario s = hw_base();
    s.name = "hw_push_q1";
    s.description = "6 V on the waist from t = 3.5 s pushing toward the y wall";
    s.safety = y_wall();
    s.disturbances.joint_offset.constant = Vec3(-6.0, 0.0, 0.0);
    s.disturbances.joint_offset_in_volts = true;
    // Switched on during the approach to the wall; a step would have no
    // finite rate bound, so it rises over 0.5 s.
    s.disturbances.joint_offset.t_on = 3.5;
    s.disturbances.joint_offset.rise_time = 0.5;
    s.filter = FilterVariant::rcbf_eso_bound;
    out.push_back(s);
  }
  {
    Scenario s = hw_base();
    s.name = "hw_gravity_z";
    s.description = "wall z >= -0.01 m, gravity pulls toward the wall";
    s.safety = z_wall();
    s.filter = FilterVariant::rcbf_eso_bound;
    out.push_back(s);
  }
  return out;
}

Scenario find_scenario(std::string_view name) {
  for (auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::vector<SweepSpec> builtin_sweeps() {
  return {
      {"hw_gain_sweep", "kd_bar scaling on hw_tracking; 0.5x is reported only",
       "hw_tracking", "nominal.kd_scale", {0.6, 1.0, 2.0, 5.0, 10.0}, {0.5}},
      {"payload_sweep", "payload masses on hw_tracking",
       "hw_tracking", "disturbances.payload_mass", {0.0, 1.0, 1.5, 2.0}, {}},
      {"bandwidth_sweep", "observer bandwidth on sim_tracking",
       "sim_tracking", "eso_bandwidths", {20.0, 40.0, 80.0}, {}},
  };
}

}  // namespace armsafe
