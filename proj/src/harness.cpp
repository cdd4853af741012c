#include "armsafe/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "armsafe/errors.hpp"
#include "armsafe/eso.hpp"

namespace armsafe {

namespace {

constexpr double kStateLimit = 1e4;

bool state_ok(const JointState& s) {
  return s.finite() && s.q.cwiseAbs().maxCoeff() < kStateLimit &&
         s.dq.cwiseAbs().maxCoeff() < kStateLimit;
}

struct AffineF {
  Vec3 f0;
  Mat3 d;
};

// f(u) = f0 + D u at the current state, with q_d following whatever u would
// be pushed into the command integrator. Restores nothing: the caller
// commands the chosen u afterwards.
AffineF probe_affine(ClosedArchitectureArm& arm, const CommandIntegrator& integ,
                     const NominalModel& nominal, double dt) {
  GroundTruthProbe probe(arm);
  const auto f_at = [&](const Vec3& u) {
    CommandIntegrator trial = integ;
    arm.command(trial.push(u, dt), u);
    return probe.total_disturbance(nominal, u);
  };
  AffineF out;
  out.f0 = f_at(Vec3::Zero());
  for (int j = 0; j < 3; ++j) out.d.col(j) = f_at(Vec3::Unit(j)) - out.f0;
  return out;
}

std::array<std::optional<double>, 3> bound_values(const RowVec3& a, double b,
                                                  const Vec3& u_nom) {
  std::array<std::optional<double>, 3> out;
  const auto cb = control_bounds(a, b, u_nom);
  for (int i = 0; i < 3; ++i) {
    if (cb[i]) out[i] = cb[i]->value;
  }
  return out;
}

FilterVariant unbounded_counterpart(FilterVariant v) {
  switch (v) {
    case FilterVariant::rcbf_eso_bound:
      return FilterVariant::rcbf_eso;
    case FilterVariant::dob_cbf_bound:
      return FilterVariant::dob_cbf;
    default:
      return v;
  }
}

}  // namespace

Trace run(const Scenario& scn, RunDiagnostics* diag) {
  scn.validate();
  const NominalModel nominal = scn.effective_nominal();
  const double dt = scn.control_dt;
  const long n = scn.samples();

  const ReferenceSample ref0 = reference_at(scn.reference, 0.0);
  const JointState initial{ref0.q + scn.initial_offset, ref0.dq};
  ClosedArchitectureArm arm(scn.arm, scn.inner, scn.disturbances, initial,
                            scn.physics_dt);
  // The outer loop only knows the kinematic parameters.
  const ArmParams& kin = scn.arm;

  EsoBank eso(scn.eso_bandwidths);
  eso.reset(initial.dq);
  CommandIntegrator integrator(initial.q);

  Vec3 gamma_bound = Vec3::Zero();
  if (scn.filter == FilterVariant::rcbf_eso_bound) {
    gamma_bound = error_bound_per_joint(scn.eso_bandwidths, scn.bound_t_s, scn.l_f);
  }
  const SafetySpec spec = scn.safety_spec(gamma_bound);
  const bool filtering = scn.filter != FilterVariant::none;

  std::optional<DobState> dob;
  if (scn.safety) {
    const CbfConstraint c0 = cbf_constraint(spec, kin, nominal, initial, Vec3::Zero());
    if (c0.h < 0.0) {
      throw ConfigError("initial state violates the safety constraint (h(0) = " +
                        std::to_string(c0.h) + ")");
    }
    if (scn.uses_dob()) dob = dob_init(scn.dob_k_b, scn.dob_b_h, c0.h_dot);
  }
  if (diag) {
    diag->gamma_bound = gamma_bound;
    diag->dob_bound = scn.filter == FilterVariant::dob_cbf_bound
                          ? scn.dob_b_h / scn.dob_k_b
                          : 0.0;
    diag->degenerate_steps = 0;
  }

  Trace trace;
  trace.rows.reserve(static_cast<std::size_t>(n) + 1);
  double t = 0.0;
  try {
    for (long k = 0;; ++k) {
      t = static_cast<double>(k) * dt;
      const JointState meas = arm.measure();
      if (!state_ok(meas)) throw DivergentState("joint state left the finite range");
      const ReferenceSample ref = reference_at(scn.reference, t);

      const Vec3 u0 = position_control_u0(ref, meas, scn.tracking);
      const Vec3 qd0 = nominal_inversion(u0, nominal, meas.dq);

      // Needed for f_true in every row, and by the oracle variants.
      const AffineF aff = probe_affine(arm, integrator, nominal, dt);

      Vec3 f_hat;
      Vec3 dq_d;
      if (scn.oracle_disturbance) {
        // u = qd0 - W f(u), W = kd_bar^-1 m_bar, solved exactly.
        const Mat3 w = nominal.inverse_gain();
        const Mat3 lhs = Mat3::Identity() + w * aff.d;
        dq_d = lhs.partialPivLu().solve(qd0 - w * aff.f0);
        f_hat = aff.f0 + aff.d * dq_d;
      } else {
        f_hat = eso.f_hat();
        dq_d = disturbance_rejection(qd0, f_hat, nominal);
      }

      TraceRow row;
      row.t = t;
      row.q = meas.q;
      row.dq = meas.dq;
      row.q_ref = ref.q;
      row.dq_d = dq_d;
      row.f_hat = f_hat;

      Vec3 u = dq_d;
      CbfConstraint known;
      if (scn.safety) {
        CbfConstraint c;
        switch (scn.filter) {
          case FilterVariant::cbf_true_f: {
            c = cbf_constraint(spec, kin, nominal, meas, aff.f0);
            const RowVec3 jc = spec.sign() * jacobian(kin, meas.q).row(spec.axis);
            c.a_row += jc * aff.d;
            c.degenerate = c.a_row.norm() < kDegenerateRowNorm;
            break;
          }
          case FilterVariant::dob_cbf:
          case FilterVariant::dob_cbf_bound:
            known = cbf_constraint(spec, kin, nominal, meas, Vec3::Zero());
            c = dob_cbf_constraint(spec, *dob, known);
            break;
          default:
            c = cbf_constraint(spec, kin, nominal, meas, f_hat);
            break;
        }
        if (filtering) {
          if (c.degenerate) {
            if (diag) ++diag->degenerate_steps;
          } else {
            u = solve_safety_qp({dq_d, c.a_row, c.b_rhs, scn.u_box});
          }
          row.slack = c.a_row.dot(u) - c.b_rhs;
          row.bound = bound_values(c.a_row, c.b_rhs, dq_d);
        }
        row.h = c.h;
        row.h_dot = c.h_dot;
      } else if (scn.u_box) {
        u = dq_d.cwiseMax(scn.u_box->lower).cwiseMin(scn.u_box->upper);
      }
      row.u_safe = u;
      row.f_true = aff.f0 + aff.d * u;
      trace.rows.push_back(std::move(row));
      if (k == n) break;

      arm.command(integrator.push(u, dt), u);
      if (!scn.oracle_disturbance) {
        eso.update(nominal.drift(meas.dq), nominal.input_gain() * u, meas.dq, dt);
      }
      if (dob) {
        *dob = dob_step(*dob, known.drift + known.a_row.dot(u), known.h_dot, dt);
      }
      arm.advance(dt);
    }
  } catch (const RuntimeFault&) {
    throw;
  } catch (const Fault& f) {
    throw RuntimeFault(f, t);
  }
  return trace;
}

Metrics metrics(const Trace& trace, const ArmParams& kinematics,
                double steady_start, double transient_threshold) {
  Metrics m;
  Vec3 joint_sq = Vec3::Zero();
  Vec3 cart_sq = Vec3::Zero();
  long window = 0;
  long intervened = 0;
  for (const TraceRow& r : trace.rows) {
    const Vec3 e = r.q - r.q_ref;
    if (r.t >= steady_start) {
      joint_sq += e.cwiseAbs2();
      const Vec3 ec = forward_kinematics(kinematics, r.q) -
                      forward_kinematics(kinematics, r.q_ref);
      cart_sq += ec.cwiseAbs2();
      ++window;
    }
    if (r.h) m.min_h = m.min_h ? std::min(*m.min_h, *r.h) : *r.h;
    if (!m.transient_time && e.cwiseAbs().maxCoeff() < transient_threshold) {
      m.transient_time = r.t;
    }
    if ((r.u_safe.array() != r.dq_d.array()).any()) ++intervened;
  }
  if (window == 0) throw InvalidParameter("metrics: empty steady-state window");
  m.joint_rmse = (joint_sq / static_cast<double>(window)).cwiseSqrt();
  m.cartesian_rmse = (cart_sq / static_cast<double>(window)).cwiseSqrt();
  m.intervention_fraction =
      static_cast<double>(intervened) / static_cast<double>(trace.rows.size());
  return m;
}

RateBounds measure_rate_bounds(const Scenario& scn, const Trace& trace) {
  RateBounds rb;
  const auto& rows = trace.rows;
  const double dt = scn.control_dt;
  std::optional<SafetySpec> spec;
  if (scn.safety) spec = scn.safety_spec(Vec3::Zero());
  const auto b_e = [&](const TraceRow& r) {
    return spec->sign() * jacobian(scn.arm, r.q).row(spec->axis).dot(r.f_true);
  };
  double prev_be = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double be = spec ? b_e(rows[k]) : 0.0;
    if (k > 0 && rows[k - 1].t >= scn.rate_window_start) {
      rb.l_f = rb.l_f.cwiseMax((rows[k].f_true - rows[k - 1].f_true).cwiseAbs() / dt);
      rb.b_h = std::max(rb.b_h, std::abs(be - prev_be) / dt);
    }
    prev_be = be;
  }
  return rb;
}

Scenario calibrate_rate_bounds(Scenario scn, int max_iterations) {
  if (!scn.uses_error_bound()) return scn;
  // Pilot with the same estimator but no bound term.
  Scenario pilot = scn;
  pilot.filter = unbounded_counterpart(scn.filter);
  RateBounds used = measure_rate_bounds(pilot, run(pilot));
  used.l_f *= 1.1;
  used.b_h *= 1.1;
  for (int i = 0; i < max_iterations; ++i) {
    scn.l_f = used.l_f;
    scn.dob_b_h = used.b_h;
    const RateBounds got = measure_rate_bounds(scn, run(scn));
    const bool covered = scn.filter == FilterVariant::rcbf_eso_bound
                             ? (got.l_f.array() <= used.l_f.array()).all()
                             : got.b_h <= used.b_h;
    if (covered) break;
    used.l_f = used.l_f.cwiseMax(1.1 * got.l_f);
    used.b_h = std::max(used.b_h, 1.1 * got.b_h);
  }
  scn.l_f = used.l_f;
  scn.dob_b_h = used.b_h;
  scn.calibrate_bounds = false;
  return scn;
}

Outcome run_scenario(const Scenario& scn) {
  Outcome out;
  out.scenario = scn.calibrate_bounds ? calibrate_rate_bounds(scn) : scn;
  out.trace = run(out.scenario, &out.diag);
  out.metrics = metrics(out.trace, out.scenario.arm, out.scenario.steady_start,
                        out.scenario.transient_threshold);
  out.diag.measured = measure_rate_bounds(out.scenario, out.trace);
  return out;
}

BoundTable bound_comparison(const Scenario& base) {
  if (!base.safety) throw InvalidParameter("bound_comparison needs a safety spec");
  Scenario scn = base.calibrate_bounds ? calibrate_rate_bounds(base) : base;
  const Trace trace = run(scn);

  const NominalModel nominal = scn.effective_nominal();
  Scenario plain = scn;
  plain.filter = FilterVariant::cbf_nominal;
  const SafetySpec nominal_spec = plain.safety_spec(Vec3::Zero());
  plain.filter = FilterVariant::rcbf_eso;
  const SafetySpec eso_spec = plain.safety_spec(Vec3::Zero());

  BoundTable table;
  Vec3 closer = Vec3::Zero();
  Vec3 defined = Vec3::Zero();
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    const TraceRow& r = trace.rows[k];
    const JointState meas{r.q, r.dq};
    const CbfConstraint cn = cbf_constraint(nominal_spec, scn.arm, nominal, meas, Vec3::Zero());
    const CbfConstraint ce = cbf_constraint(eso_spec, scn.arm, nominal, meas, r.f_hat);
    // Ground-truth f at the command actually applied, in place of f_hat.
    const CbfConstraint ct = cbf_constraint(eso_spec, scn.arm, nominal, meas, r.f_true);

    BoundSample s;
    s.t = r.t;
    s.true_f = bound_values(ct.a_row, ct.b_rhs, r.dq_d);
    s.nominal = bound_values(cn.a_row, cn.b_rhs, r.dq_d);
    s.eso = bound_values(ce.a_row, ce.b_rhs, r.dq_d);
    for (int i = 0; i < 3; ++i) {
      if (!s.true_f[i] || !s.nominal[i] || !s.eso[i]) continue;
      const double gn = std::abs(*s.nominal[i] - *s.true_f[i]);
      const double ge = std::abs(*s.eso[i] - *s.true_f[i]);
      table.sup_gap_nominal[i] = std::max(table.sup_gap_nominal[i], gn);
      table.sup_gap_eso[i] = std::max(table.sup_gap_eso[i], ge);
      defined[i] += 1.0;
      if (ge < gn) closer[i] += 1.0;
    }
    table.samples.push_back(s);
  }
  for (int i = 0; i < 3; ++i) {
    table.eso_closer_fraction[i] = defined[i] > 0.0 ? closer[i] / defined[i] : 0.0;
  }
  return table;
}

std::vector<BatchResult> run_batch(const std::vector<Scenario>& scenarios) {
  std::vector<std::future<Outcome>> futures;
  futures.reserve(scenarios.size());
  for (const Scenario& s : scenarios) {
    futures.push_back(std::async(std::launch::async, [s] { return run_scenario(s); }));
  }
  std::vector<BatchResult> out(scenarios.size());
  for (std::size_t i = 0; i < futures.size(); ++i) {
    try {
      out[i].outcome = futures[i].get();
    } catch (const Fault& f) {
      out[i].error_name = f.name();
      out[i].error = f.what();
    } catch (const std::exception& e) {
      out[i].error_name = "internal-error";
      out[i].error = e.what();
    }
  }
  return out;
}

}  // namespace armsafe
