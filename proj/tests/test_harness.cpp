#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "armsafe/errors.hpp"
#include "armsafe/harness.hpp"
#include "armsafe/io.hpp"

using namespace armsafe;

namespace {

Scenario shortened(const std::string& name, double duration) {
  Scenario s = find_scenario(name);
  s.duration = duration;
  s.steady_start = std::min(s.steady_start, duration / 2);
  s.rate_window_start = std::min(s.rate_window_start, duration / 2);
  return s;
}

std::string csv(const Trace& t) {
  std::ostringstream o;
  write_trace_csv(o, t);
  return o.str();
}

Trace synthetic(int n, double dt) {
  Trace t;
  for (int k = 0; k <= n; ++k) {
    TraceRow r;
    r.t = k * dt;
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace

TEST(Run, Deterministic) {
  Scenario s = shortened("sim_wall_y", 1.0);
  s.filter = FilterVariant::rcbf_eso_bound;
  s.l_f = Vec3(5, 5, 5);
  const std::string a = csv(run(s)), b = csv(run(s));
  EXPECT_EQ(a, b);
}

TEST(Run, RowCountAndTimeGrid) {
  const Scenario s = shortened("sim_tracking", 0.5);
  const Trace t = run(s);
  ASSERT_EQ(static_cast<long>(t.rows.size()), s.samples() + 1);
  for (std::size_t k = 1; k < t.rows.size(); ++k) EXPECT_GT(t.rows[k].t, t.rows[k - 1].t);
  EXPECT_NEAR(t.rows.back().t, 0.5, 1e-12);
}

TEST(Run, ZeroOrderHoldReplay) {
  // Replaying the recorded commands, each held over one control period,
  // reproduces the recorded joint trajectory exactly.
  const Scenario s = shortened("sim_tracking", 0.3);
  const Trace t = run(s);
  const ReferenceSample r0 = reference_at(s.reference, 0.0);
  const JointState init{r0.q + s.initial_offset, r0.dq};
  ClosedArchitectureArm arm(s.arm, s.inner, s.disturbances, init, s.physics_dt);
  CommandIntegrator integ(init.q);
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const JointState m = arm.measure();
    ASSERT_EQ(m.q, t.rows[k].q) << k;
    ASSERT_EQ(m.dq, t.rows[k].dq) << k;
    if (k + 1 == t.rows.size()) break;
    arm.command(integ.push(t.rows[k].u_safe, s.control_dt), t.rows[k].u_safe);
    arm.advance(s.control_dt);
  }
}

TEST(Run, RateSeparation) {
  Scenario s = shortened("sim_tracking", 2.0);
  const Vec3 coarse = run(s).rows.back().q;
  s.physics_dt /= 2;
  const Vec3 fine = run(s).rows.back().q;
  EXPECT_LT((coarse - fine).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Run, OracleTracksExactly) {
  const Scenario s = find_scenario("sim_oracle");
  const Trace t = run(s);
  double worst = 0.0;
  for (const TraceRow& r : t.rows) worst = std::max(worst, (r.q - r.q_ref).cwiseAbs().maxCoeff());
  EXPECT_LT(worst, 1e-6);
}

TEST(Run, OracleErrorFollowsDesignedDynamics) {
  Scenario s = find_scenario("sim_oracle");
  s.duration = 1.0;
  s.steady_start = 0.5;
  s.initial_offset = Vec3(0.05, -0.03, 0.04);
  const Trace t = run(s);
  // Critically damped s^2 + kd s + kp with e(0) = e0, de(0) = 0.
  const double wn = std::sqrt(s.tracking.kp[0]);
  ASSERT_NEAR(s.tracking.kd[0], 2 * wn, 1e-12);
  for (const TraceRow& r : t.rows) {
    const Vec3 expect = s.initial_offset * (1 + wn * r.t) * std::exp(-wn * r.t);
    EXPECT_LT(((r.q - r.q_ref) - expect).cwiseAbs().maxCoeff(),
              0.05 * s.initial_offset.cwiseAbs().maxCoeff()) << r.t;
  }
}

TEST(Run, InitialSetViolationIsConfigError) {
  Scenario s = shortened("sim_wall_y", 0.1);
  s.safety->offset = 2.0;
  EXPECT_THROW(run(s), ConfigError);
}

TEST(Run, MarkersNeverNan) {
  Scenario s = shortened("sim_wall_y", 1.0);
  s.filter = FilterVariant::cbf_nominal;
  for (const TraceRow& r : run(s).rows) {
    ASSERT_TRUE(r.h && r.h_dot && r.slack);
    EXPECT_TRUE(std::isfinite(*r.h) && std::isfinite(*r.slack));
    for (const auto& b : r.bound) {
      if (b) EXPECT_TRUE(std::isfinite(*b));
    }
  }
  s.filter = FilterVariant::none;
  s.safety.reset();
  for (const TraceRow& r : run(s).rows) {
    EXPECT_FALSE(r.h || r.h_dot || r.slack || r.bound[0] || r.bound[1] || r.bound[2]);
  }
}

TEST(Metrics, ZeroError) {
  const Metrics m = metrics(synthetic(100, 0.01), ArmParams{}, 0.5);
  EXPECT_EQ(m.joint_rmse.norm(), 0.0);
  EXPECT_EQ(m.cartesian_rmse.norm(), 0.0);
  EXPECT_FALSE(m.min_h);
  EXPECT_EQ(m.transient_time, 0.0);
  EXPECT_EQ(m.intervention_fraction, 0.0);
}

TEST(Metrics, ConstantError) {
  Trace t = synthetic(100, 0.01);
  for (TraceRow& r : t.rows) r.q[0] = 0.1;
  const Metrics m = metrics(t, ArmParams{}, 0.5);
  EXPECT_NEAR(m.joint_rmse[0], 0.1, 1e-15);
  EXPECT_EQ(m.joint_rmse[1], 0.0);
  EXPECT_EQ(m.joint_rmse[2], 0.0);
  EXPECT_FALSE(m.transient_time);
  EXPECT_THROW(metrics(t, ArmParams{}, 2.0), InvalidParameter);
}

TEST(Metrics, MinHOnGrid) {
  const double dt = 1e-3;
  Trace t = synthetic(7000, dt);
  for (TraceRow& r : t.rows) r.h = std::sin(r.t) - 0.5;
  const Metrics m = metrics(t, ArmParams{}, 1.0);
  const double k = std::round(1.5 * std::numbers::pi / dt);
  EXPECT_DOUBLE_EQ(*m.min_h, std::sin(k * dt) - 0.5);
  EXPECT_NEAR(*m.min_h, -1.5, 1e-6);
}

TEST(Metrics, InterventionFraction) {
  Trace t = synthetic(3, 0.1);
  t.rows[1].u_safe[2] = 1.0;
  EXPECT_DOUBLE_EQ(metrics(t, ArmParams{}, 0.0).intervention_fraction, 0.25);
}

TEST(BoundComparison, CoincideWithoutUncertainty) {
  Scenario s = shortened("sim_wall_y", 1.0);
  // A configuration-independent mass matrix with no gravity, friction or
  // position feedback, and c_bar = kd to absorb the inner-loop damping,
  // leaves f identically zero.
  s.arm.masses = Vec3::Constant(1e-12);
  s.arm.link_inertias = Vec3(0.5, 0.4, 0.2);
  s.arm.rotor_inertias = Vec3(1.0, 1.0, 1.0);
  s.arm.gravity_accel = 0.0;
  s.arm.viscous_friction.setZero();
  s.arm.coulomb_friction.setZero();
  s.inner.kp.setZero();
  s.nominal = NominalModel::reduced(mass_matrix(s.arm, Vec3::Zero()), s.inner.kd);
  s.nominal.c_bar = s.inner.kd.asDiagonal();
  s.kd_scale = 1.0;
  const BoundTable b = bound_comparison(s);
  ASSERT_FALSE(b.samples.empty());
  EXPECT_LT(b.sup_gap_nominal.maxCoeff(), 1e-9);
  // The Euler observer sees the drift change inside each control period;
  // that residual is first order in control_dt.
  EXPECT_LT(b.sup_gap_eso.maxCoeff(), 5e-3);
  s.control_dt = 1e-4;
  const BoundTable fine = bound_comparison(s);
  EXPECT_LT(fine.sup_gap_eso.maxCoeff(), 0.2 * b.sup_gap_eso.maxCoeff());
  for (const BoundSample& r : b.samples) {
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(r.true_f[i].has_value(), r.eso[i].has_value());
      if (r.true_f[i]) EXPECT_FALSE(std::isnan(*r.true_f[i]));
    }
  }
}

TEST(Builtins, Catalogue) {
  const auto all = builtin_scenarios();
  EXPECT_GE(all.size(), 10u);
  std::set<std::string> names;
  for (const Scenario& s : all) {
    EXPECT_TRUE(names.insert(s.name).second) << s.name;
    EXPECT_FALSE(s.description.empty());
    EXPECT_NO_THROW(s.validate()) << s.name;
  }
  const Scenario wall = find_scenario("sim_wall_y");
  ASSERT_TRUE(wall.safety);
  EXPECT_EQ(wall.safety->offset, -0.1);
  EXPECT_EQ(wall.safety->axis, 1);
  EXPECT_THROW(find_scenario("nosuch"), ConfigError);

  std::map<std::string, SweepSpec> sweeps;
  for (const SweepSpec& s : builtin_sweeps()) sweeps[s.name] = s;
  EXPECT_EQ(sweeps.at("hw_gain_sweep").values, (std::vector<double>{0.6, 1, 2, 5, 10}));
  EXPECT_EQ(sweeps.at("hw_gain_sweep").reported_only, (std::vector<double>{0.5}));
  EXPECT_EQ(sweeps.at("payload_sweep").values, (std::vector<double>{0, 1, 1.5, 2}));
  EXPECT_EQ(sweeps.at("bandwidth_sweep").values, (std::vector<double>{20, 40, 80}));
}

TEST(Batch, MatchesSequentialRunsInOrder) {
  std::vector<Scenario> v;
  for (double w : {20.0, 40.0, 80.0}) {
    Scenario s = shortened("sim_tracking", 0.5);
    s.eso_bandwidths = Vec3::Constant(w);
    v.push_back(s);
  }
  v.push_back(v[0]);
  v.back().safety.reset();
  v.back().filter = FilterVariant::cbf_nominal;  // invalid without a wall
  const auto res = run_batch(v);
  ASSERT_EQ(res.size(), 4u);
  for (int i = 0; i < 3; ++i) {
    ASSERT_TRUE(res[i].outcome);
    EXPECT_EQ(csv(res[i].outcome->trace), csv(run(v[i])));
  }
  EXPECT_FALSE(res[3].outcome);
  EXPECT_FALSE(res[3].error_name.empty());
}
