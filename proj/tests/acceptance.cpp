// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria are checked on the builtin scenarios as shipped.

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "armsafe/config.hpp"
#include "armsafe/errors.hpp"
#include "armsafe/eso.hpp"
#include "armsafe/harness.hpp"

using namespace armsafe;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

void note(Verdict& v, bool ok, const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  if (!v.detail.empty()) v.detail += "; ";
  v.detail += buf;
  if (!ok) {
    v.detail += " [x]";
    v.pass = false;
  }
}

int failures = 0;

void criterion(const char* id, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const Fault& f) {
    v = {false, std::string(f.name()) + ": " + f.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) note(v, false, "runtime %.1f s over budget %.0f s", secs, budget_s);
  if (!v.pass) ++failures;
  std::printf("%s %s (%.2f s): %s\n", id, v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
  std::fflush(stdout);
}

struct Rng {
  std::mt19937_64 gen{20240917};
  double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  Vec3 v(double lo, double hi) { return {u(lo, hi), u(lo, hi), u(lo, hi)}; }
};

double min_h(const Scenario& base, FilterVariant f) {
  Scenario s = base;
  s.filter = f;
  return run_scenario(s).metrics.min_h.value();
}

// ---------------------------------------------------------------------------

Verdict ac1() {
  Rng rng;
  ArmParams arm;
  arm.payload_mass = 1.0;
  const double e = 1e-6;
  double sym = 0, min_eig = std::numeric_limits<double>::infinity(), skew = 0, grav = 0,
         jac = 0;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 q = rng.v(-3.1, 3.1), dq = rng.v(-2, 2), v = rng.v(-1, 1);
    const Mat3 m = mass_matrix(arm, q);
    sym = std::max(sym, (m - m.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat3>(m).eigenvalues().minCoeff());
    const Mat3 mdot = (mass_matrix(arm, q + e * dq) - mass_matrix(arm, q - e * dq)) / (2 * e);
    skew = std::max(skew, std::abs(v.dot((mdot - 2 * coriolis_matrix(arm, q, dq)) * v)));
    const Mat3 j = jacobian(arm, q);
    for (int i = 0; i < 3; ++i) {
      Vec3 h = Vec3::Zero();
      h[i] = e;
      const double dp = (potential_energy(arm, q + h) - potential_energy(arm, q - h)) / (2 * e);
      grav = std::max(grav, std::abs(dp - gravity_vector(arm, q)[i]));
      const Vec3 dfk = (forward_kinematics(arm, q + h) - forward_kinematics(arm, q - h)) / (2 * e);
      jac = std::max(jac, (dfk - j.col(i)).cwiseAbs().maxCoeff());
    }
  }
  Verdict v;
  note(v, sym == 0.0, "max|M-M^T| = %g", sym);
  note(v, min_eig > 0.0, "min eig(M) = %.4g", min_eig);
  note(v, skew < 1e-6, "max|v^T(Mdot-2C)v| = %.2e", skew);
  note(v, grav < 1e-5, "gravity vs dV/dq %.2e", grav);
  note(v, jac < 1e-5, "Jacobian vs FD %.2e", jac);
  return v;
}

Verdict ac2() {
  Verdict v;
  for (const char* name : {"sim_wall_y", "hw_push_q1", "hw_gravity_z"}) {
    const double h = min_h(find_scenario(name), FilterVariant::rcbf_eso_bound);
    note(v, h >= -1e-6, "%s min_h = %.4e m", name, h);
  }
  return v;
}

Verdict ac3() {
  const BoundTable b = bound_comparison(find_scenario("sim_wall_y"));
  Verdict v;
  for (int i = 0; i < 3; ++i) {
    const bool ok = b.sup_gap_eso[i] < b.sup_gap_nominal[i] && b.eso_closer_fraction[i] >= 0.95;
    note(v, ok, "joint %d sup gap ESO %.3g < nominal %.3g, closer %.1f%%", i + 1,
         b.sup_gap_eso[i], b.sup_gap_nominal[i], 100 * b.eso_closer_fraction[i]);
  }
  return v;
}

Verdict ac4() {
  Verdict v;
  for (const char* name : {"hw_push_q1", "hw_gravity_z"}) {
    const Scenario s = find_scenario(name);
    const double nom = min_h(s, FilterVariant::cbf_nominal);
    const double eso = min_h(s, FilterVariant::rcbf_eso_bound);
    const double dob = min_h(s, FilterVariant::dob_cbf_bound);
    note(v, nom < 0.0 && eso >= 0.0 && dob >= 0.0,
         "%s min_h nominal %.4e, rcbf_eso_bound %.4e, dob_cbf_bound %.4e", name, nom, eso, dob);
  }
  return v;
}

Verdict ac5() {
  // f(t) = (l_f / w_d) sin(w_d t) drives dq' = f; dq is sampled exactly.
  const double t_s = 1e-4, l_f = 1.0;
  Verdict v;
  for (double omega : {20.0, 80.0}) {
    BoundSpec spec;
    spec.l_f = l_f;
    spec.t_s = t_s;
    spec.omega_discrete = discretize_bandwidth(omega, t_s);
    const double gamma = estimation_error_bound(spec).gamma_bound;
    double worst = 0.0;
    long violations = 0;
    for (double wd : {0.5, 1.0, 5.0, 20.0, 80.0, 300.0}) {
      const EsoGains g = gains_from_bandwidth(omega);
      EsoState st;
      for (long k = 0; k <= 100000; ++k) {
        const double t = static_cast<double>(k) * t_s;
        if (t >= 0.2) {
          const double err = std::abs(l_f / wd * std::sin(wd * t) - st.xhat3);
          worst = std::max(worst, err);
          if (err > gamma) ++violations;
        }
        const double dq = l_f / (wd * wd) * (1.0 - std::cos(wd * t));
        st = eso_step(st, g, 0.0, 0.0, dq, t_s);
      }
    }
    note(v, violations == 0, "omega_o %g: max|f - fhat| %.6e <= Gamma %.6e (%ld violations)",
         omega, worst, gamma, violations);
  }
  return v;
}

Verdict ac6() {
  const Scenario base = find_scenario("sim_tracking");
  std::vector<Scenario> runs;
  for (double w : {20.0, 40.0, 80.0}) {
    Scenario s = base;
    s.eso_bandwidths = Vec3::Constant(w);
    runs.push_back(s);
  }
  Scenario oracle = base;
  oracle.oracle_disturbance = true;
  runs.push_back(oracle);
  const auto res = run_batch(runs);
  Verdict v;
  std::vector<Vec3> rmse;
  for (const auto& r : res) {
    if (!r.outcome) {
      note(v, false, "%s: %s", r.error_name.c_str(), r.error.c_str());
      return v;
    }
    rmse.push_back(r.outcome->metrics.joint_rmse);
  }
  for (int k = 0; k < 3; ++k) {
    note(v, true, "w=%g rmse [%.3e %.3e %.3e]", runs[k].eso_bandwidths[0], rmse[k][0],
         rmse[k][1], rmse[k][2]);
  }
  bool mono = true;
  for (int k = 1; k < 3; ++k) mono = mono && (rmse[k].array() <= 1.05 * rmse[k - 1].array()).all();
  note(v, mono, "non-increasing within 5%%");
  bool beats = true;
  for (int k = 0; k < 3; ++k) beats = beats && (rmse[3].array() < rmse[k].array()).all();
  note(v, beats, "oracle rmse [%.3e %.3e %.3e] below all", rmse[3][0], rmse[3][1], rmse[3][2]);
  return v;
}

Verdict ac7() {
  constexpr double kThreshold = 0.2;
  SweepSpec sweep;
  for (const SweepSpec& s : builtin_sweeps()) {
    if (s.name == "hw_gain_sweep") sweep = s;
  }
  const Scenario base = find_scenario(sweep.base);
  std::vector<Scenario> runs;
  std::vector<double> all = sweep.values;
  all.insert(all.end(), sweep.reported_only.begin(), sweep.reported_only.end());
  for (double x : all) {
    Scenario s = base;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    set_config_value(s, sweep.key, buf);
    runs.push_back(s);
  }
  const auto res = run_batch(runs);
  Verdict v;
  for (std::size_t k = 0; k < res.size(); ++k) {
    const bool asserted = k < sweep.values.size();
    if (!res[k].outcome) {
      note(v, !asserted, "%gx: %s%s", all[k], res[k].error_name.c_str(),
           asserted ? "" : " (reported only)");
      continue;
    }
    const Trace& t = res[k].outcome->trace;
    bool bounded = true;
    for (const TraceRow& r : t.rows) bounded = bounded && r.q.allFinite() && r.dq.allFinite();
    const double worst = res[k].outcome->metrics.joint_rmse.maxCoeff();
    note(v, !asserted || (bounded && worst < kThreshold), "%gx max rmse %.4f%s", all[k], worst,
         asserted ? "" : " (reported only)");
  }
  return v;
}

Verdict ac8() {
  Verdict v;
  for (double w : {0.9, 0.99, 0.999}) {
    BoundSpec spec{1.0, 1.0, 1, w};
    const ErrorBound b = estimation_error_bound(spec);
    const long k = b.truncation_terms;
    const double s_k = series_partial_sum(w, k), s_2k = series_partial_sum(w, 2 * k);
    // Independent brute force from the r = 1 kernel written out.
    double brute = 0.0;
    for (long i = 1; i <= k; ++i) {
      brute += i <= 2 ? 1.0
                      : std::pow(w, static_cast<double>(i - 1)) +
                            static_cast<double>(i - 1) * (1 - w) * std::pow(w, static_cast<double>(i - 2));
    }
    const double trunc = std::abs(s_2k - s_k) / s_k;
    const double rel = std::abs(b.series_sum - brute) / brute;
    note(v, trunc < 1e-9 && rel < 1e-9, "w=%g K=%ld |S2K-SK|/SK %.1e, vs brute %.1e", w, k,
         trunc, rel);
  }
  return v;
}

Verdict ac9() {
  Rng rng;
  const int n = 21;
  const double step = 2.0 / (n - 1);
  int feasible = 0, inactive = 0, bad = 0, bad_identity = 0;
  double worst_excess = 0.0;
  while (feasible < 1000) {
    SafetyQp qp;
    qp.u_nominal = rng.v(-1.5, 1.5);
    qp.a_row = rng.v(-1, 1).transpose();
    qp.b_rhs = rng.u(-1.5, 1.5);
    qp.u_box = InputBox{Vec3::Constant(-1), Vec3::Constant(1)};
    double grid_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n * n * n; ++i) {
      const Vec3 g(-1 + step * (i % n), -1 + step * (i / n % n), -1 + step * (i / (n * n)));
      if (qp.a_row.dot(g) >= qp.b_rhs) grid_best = std::min(grid_best, (g - qp.u_nominal).norm());
    }
    if (!std::isfinite(grid_best)) continue;
    ++feasible;
    const Vec3 u = solve_safety_qp(qp);
    const double d = (u - qp.u_nominal).norm();
    const bool ok = qp.a_row.dot(u) >= qp.b_rhs - 1e-12 && d <= grid_best + 1e-12 &&
                    grid_best - d <= std::sqrt(3.0) * step;
    if (!ok) ++bad;
    worst_excess = std::max(worst_excess, grid_best - d);
    if (qp.a_row.dot(qp.u_nominal) >= qp.b_rhs &&
        (qp.u_nominal.array().abs() <= 1.0).all()) {
      ++inactive;
      if (!(u.array() == qp.u_nominal.array()).all()) ++bad_identity;
    }
  }
  Verdict v;
  note(v, bad == 0, "%d/%d instances optimal vs 21^3 grid (max grid excess %.3f)",
       feasible - bad, feasible, worst_excess);
  note(v, bad_identity == 0 && inactive > 0, "identity exact on %d inactive instances",
       inactive);
  return v;
}

}  // namespace

int main() {
  criterion("AC-1", 10, ac1);
  criterion("AC-2", 60, ac2);
  criterion("AC-3", 30, ac3);
  criterion("AC-4", 60, ac4);
  criterion("AC-5", 20, ac5);
  criterion("AC-6", 60, ac6);
  criterion("AC-7", 90, ac7);
  criterion("AC-8", 1, ac8);
  criterion("AC-9", 30, ac9);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
