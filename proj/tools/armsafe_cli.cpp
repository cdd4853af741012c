// armsafe: run scenarios, sweeps and filter comparisons from the shell.
//
// Exit codes: 0 ok, 2 usage or configuration error, 3 runtime fault.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "armsafe/config.hpp"
#include "armsafe/errors.hpp"
#include "armsafe/eso.hpp"
#include "armsafe/harness.hpp"
#include "armsafe/io.hpp"

namespace fs = std::filesystem;
using namespace armsafe;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

// Raised for configuration problems detected by the CLI itself.
struct UsageError : ConfigError {
  using ConfigError::ConfigError;
};

struct Common {
  std::string scenario;
  std::string config;
  std::string filter;
  std::vector<std::string> sets;
  std::string out = ".";
  std::vector<std::string> formats{"csv", "json"};
  bool plots = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_filter = true) {
  cmd->add_option("-s,--scenario", c.scenario, "builtin scenario name (see list-scenarios)");
  cmd->add_option("-c,--config", c.config, "YAML or JSON scenario document");
  if (with_filter) cmd->add_option("-f,--filter", c.filter, "shorthand for --set filter=NAME");
  cmd->add_option("--set", c.sets, "override a config key, KEY=VALUE (repeatable)");
  cmd->add_option("-o,--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--format", c.formats, "export formats: csv, json")
      ->delimiter(',')
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd->add_flag("--plots", c.plots, "write SVG plots");
}

RunConfig to_run_config(const Common& c) {
  RunConfig cfg;
  cfg.scenario = c.scenario;
  cfg.document_path = c.config;
  cfg.output_dir = c.out;
  cfg.plots = c.plots;
  cfg.write_csv = std::find(c.formats.begin(), c.formats.end(), "csv") != c.formats.end();
  cfg.write_json = std::find(c.formats.begin(), c.formats.end(), "json") != c.formats.end();
  if (!c.scenario.empty() && !c.config.empty()) {
    throw UsageError("give either --scenario or --config, not both");
  }
  if (c.scenario.empty() && c.config.empty()) {
    throw UsageError("one of --scenario or --config is required");
  }
  if (!c.filter.empty()) cfg.overrides.emplace_back("filter", c.filter);
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
    }
    cfg.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw UsageError("cannot write '" + p.string() + "'");
}

std::string trace_csv(const Trace& t) {
  std::ostringstream s;
  write_trace_csv(s, t);
  return s.str();
}

// Shortest text that reads back to the same double.
std::string exact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

std::string fmt(const Vec3& v) {
  return "[" + fmt(v[0]) + ", " + fmt(v[1]) + ", " + fmt(v[2]) + "]";
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

PlotSeries series(const Trace& tr, const std::string& label,
                  const std::function<double(const TraceRow&)>& y) {
  PlotSeries s;
  s.label = label;
  for (const TraceRow& r : tr.rows) {
    s.x.push_back(r.t);
    s.y.push_back(y(r));
  }
  return s;
}

double opt_or_nan(const std::optional<double>& v) { return v ? *v : kNaN; }

void write_run_plots(const fs::path& dir, const std::string& prefix, const Outcome& o) {
  const std::string tag = o.scenario.name + " / " + std::string(to_string(o.scenario.filter));
  PlotSpec joints{"Joint tracking: " + tag, "t (s)", "q (rad)", {}, std::nullopt};
  for (int i = 0; i < 3; ++i) {
    const std::string j = std::to_string(i + 1);
    joints.series.push_back(series(o.trace, "q" + j, [i](const TraceRow& r) { return r.q[i]; }));
    joints.series.push_back(
        series(o.trace, "q*" + j, [i](const TraceRow& r) { return r.q_ref[i]; }));
  }
  write_file(dir / (prefix + "joints.svg"), render_svg(joints));

  PlotSpec dist{"Total disturbance and ESO estimate: " + tag, "t (s)", "f (rad/s^2)", {},
                std::nullopt};
  for (int i = 0; i < 3; ++i) {
    const std::string j = std::to_string(i + 1);
    dist.series.push_back(series(o.trace, "f" + j, [i](const TraceRow& r) { return r.f_true[i]; }));
    dist.series.push_back(
        series(o.trace, "f_hat" + j, [i](const TraceRow& r) { return r.f_hat[i]; }));
  }
  write_file(dir / (prefix + "disturbance.svg"), render_svg(dist));

  if (o.scenario.safety) {
    PlotSpec h{"Barrier value h(t): " + tag, "t (s)", "h (m)", {}, 0.0};
    h.series.push_back(series(o.trace, "h", [](const TraceRow& r) { return opt_or_nan(r.h); }));
    write_file(dir / (prefix + "h.svg"), render_svg(h));
  }
  if (o.scenario.filter != FilterVariant::none) {
    PlotSpec b{"Control bounds and commands: " + tag, "t (s)", "rad/s", {}, std::nullopt};
    for (int i = 0; i < 3; ++i) {
      const std::string j = std::to_string(i + 1);
      b.series.push_back(
          series(o.trace, "bound" + j, [i](const TraceRow& r) { return opt_or_nan(r.bound[i]); }));
      b.series.push_back(
          series(o.trace, "u_safe" + j, [i](const TraceRow& r) { return r.u_safe[i]; }));
    }
    write_file(dir / (prefix + "bounds.svg"), render_svg(b));
  }
}

void print_outcome(const Outcome& o) {
  const Metrics& m = o.metrics;
  std::cout << "scenario " << o.scenario.name << " filter " << to_string(o.scenario.filter)
            << "\n  joint_rmse " << fmt(m.joint_rmse) << " rad\n  cartesian_rmse "
            << fmt(m.cartesian_rmse) << " m\n  min_h " << fmt(m.min_h) << " m\n  transient_time "
            << fmt(m.transient_time) << " s\n  intervention_fraction "
            << fmt(m.intervention_fraction) << "\n";
  if (o.scenario.filter == FilterVariant::rcbf_eso_bound) {
    std::cout << "  l_f " << fmt(o.scenario.l_f) << "  Gamma " << fmt(o.diag.gamma_bound) << "\n";
  } else if (o.scenario.filter == FilterVariant::dob_cbf_bound) {
    std::cout << "  b_h " << fmt(o.scenario.dob_b_h) << "  b_h/k_b " << fmt(o.diag.dob_bound)
              << "\n";
  }
  if (o.diag.degenerate_steps > 0) {
    std::cout << "  degenerate constraint steps " << o.diag.degenerate_steps << "\n";
  }
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c, bool print_config) {
  const RunConfig cfg = to_run_config(c);
  const Scenario scn = resolve_scenario(cfg);
  if (print_config) {
    std::cout << scenario_to_document(scn);
    return kOk;
  }
  const fs::path dir = prepare_dir(cfg.output_dir);
  const Outcome o = run_scenario(scn);
  if (cfg.write_csv) write_file(dir / "trace.csv", trace_csv(o.trace));
  if (cfg.write_json) write_file(dir / "metrics.json", metrics_to_json(o.metrics));
  // The scenario as run, calibrated bounds included.
  write_file(dir / "scenario.yaml", scenario_to_document(o.scenario));
  if (cfg.plots) write_run_plots(dir, "", o);
  print_outcome(o);
  return kOk;
}

int cmd_sweep(const Common& c, std::string sweep_name, std::string param,
              std::vector<double> values) {
  std::vector<double> reported_only;
  Common base = c;
  if (!sweep_name.empty()) {
    const auto sweeps = builtin_sweeps();
    auto it = std::find_if(sweeps.begin(), sweeps.end(),
                           [&](const SweepSpec& s) { return s.name == sweep_name; });
    if (it == sweeps.end()) throw UsageError("unknown sweep '" + sweep_name + "'");
    if (base.scenario.empty() && base.config.empty()) base.scenario = it->base;
    if (param.empty()) param = it->key;
    if (values.empty()) {
      values = it->values;
      reported_only = it->reported_only;
    }
  }
  if (param.empty()) throw UsageError("--param is required");
  if (values.empty()) throw UsageError("sweep needs at least one value");

  const RunConfig cfg = to_run_config(base);
  const Scenario scn = resolve_scenario(cfg);
  if (!is_config_key(param)) throw UsageError("unknown config key '" + param + "'");

  // Type-check every point before anything runs.
  std::vector<double> all = values;
  all.insert(all.end(), reported_only.begin(), reported_only.end());
  std::vector<Scenario> points;
  for (double v : all) {
    Scenario s = scn;
    set_config_value(s, param, exact(v));
    try {
      s.validate();
    } catch (const Fault& f) {
      throw UsageError(param + "=" + exact(v) + ": " + f.what());
    }
    points.push_back(std::move(s));
  }

  const fs::path dir = prepare_dir(cfg.output_dir);
  const auto results = run_batch(points);

  std::ostringstream table;
  table << "value," << kMetricsColumns << ",status\n";
  bool failed = false;
  std::cout << param << " sweep on " << scn.name << "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const bool asserted = i < values.size();
    const BatchResult& r = results[i];
    const std::string buf = exact(all[i]);
    std::string status = r.outcome ? "ok" : r.error_name;
    if (!asserted) status += " (reported only)";
    if (r.outcome) {
      table << buf << ',' << metrics_csv_fields(r.outcome->metrics) << ',' << status << '\n';
      std::cout << "  " << buf << "  joint_rmse " << fmt(r.outcome->metrics.joint_rmse)
                << "  min_h " << fmt(r.outcome->metrics.min_h) << "  " << status << "\n";
      if (cfg.write_csv) {
        write_file(dir / ("trace_" + std::to_string(i) + ".csv"), trace_csv(r.outcome->trace));
      }
    } else {
      table << buf << ",,,,,,,,,," << status << '\n';
      std::cout << "  " << buf << "  " << status << ": " << r.error << "\n";
      if (asserted) {
        std::cerr << r.error_name << ": " << r.error << "\n";
        failed = true;
      }
    }
  }
  write_file(dir / "sweep.csv", table.str());

  if (cfg.plots) {
    PlotSpec p{"Steady-state joint RMSE vs " + param, param, "RMSE (rad)", {}, std::nullopt};
    for (int j = 0; j < 3; ++j) {
      PlotSeries s;
      s.label = "joint " + std::to_string(j + 1);
      for (std::size_t i = 0; i < results.size(); ++i) {
        s.x.push_back(all[i]);
        s.y.push_back(results[i].outcome ? results[i].outcome->metrics.joint_rmse[j] : kNaN);
      }
      // Sort by value so the reported-only points join the curve in place.
      std::vector<std::size_t> idx(s.x.size());
      for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
      PlotSeries sorted{s.label, {}, {}};
      for (auto k : idx) {
        sorted.x.push_back(s.x[k]);
        sorted.y.push_back(s.y[k]);
      }
      p.series.push_back(std::move(sorted));
    }
    write_file(dir / "sweep_rmse.svg", render_svg(p));
  }
  return failed ? kRuntime : kOk;
}

int cmd_bound(const std::vector<double>& omega, double t_s, const std::vector<double>& l_f,
              int r_i) {
  if (!(t_s > 0.0)) throw UsageError("t_s must be > 0");
  if (omega.size() != 1 && omega.size() != 3) throw UsageError("give 1 or 3 bandwidths");
  if (l_f.size() != 1 && l_f.size() != 3) throw UsageError("give 1 or 3 rate bounds");
  const std::size_t n = std::max(omega.size(), l_f.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double w = omega[omega.size() == 1 ? 0 : i];
    const double l = l_f[l_f.size() == 1 ? 0 : i];
    if (!(w > 0.0) || !std::isfinite(w)) throw UsageError("omega_o must be > 0");
    if (!(l >= 0.0) || !std::isfinite(l)) throw UsageError("l_f must be >= 0");
    BoundSpec spec;
    spec.l_f = l;
    spec.t_s = t_s;
    spec.r_i = r_i;
    spec.omega_discrete = discretize_bandwidth(w, t_s);
    ErrorBound b;
    try {
      b = estimation_error_bound(spec);
    } catch (const Fault& f) {
      throw UsageError(f.what());
    }
    char line[256];
    std::snprintf(line, sizeof line,
                  "joint %zu: omega_o=%g t_s=%g l_f=%g omega_d=%.12g Gamma=%.6e K=%ld S_K=%.12g\n",
                  i + 1, w, t_s, l, spec.omega_discrete, b.gamma_bound, b.truncation_terms,
                  b.series_sum);
    std::cout << line;
  }
  return kOk;
}

int cmd_compare(const Common& c, const std::vector<std::string>& variants, bool bounds) {
  if (variants.size() < 2) throw UsageError("compare needs at least two variants");
  const RunConfig cfg = to_run_config(c);
  const Scenario base = resolve_scenario(cfg);
  std::vector<Scenario> runs;
  for (const std::string& v : variants) {
    Scenario s = base;
    set_config_value(s, "filter", v);
    try {
      s.validate();
    } catch (const Fault& f) {
      throw UsageError(v + ": " + f.what());
    }
    runs.push_back(std::move(s));
  }
  const fs::path dir = prepare_dir(cfg.output_dir);
  const auto results = run_batch(runs);

  std::ostringstream table;
  table << "variant," << kMetricsColumns << ",status\n";
  int code = kOk;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const BatchResult& r = results[i];
    if (r.outcome) {
      table << variants[i] << ',' << metrics_csv_fields(r.outcome->metrics) << ",ok\n";
      print_outcome(*r.outcome);
    } else {
      table << variants[i] << ",,,,,,,,,," << r.error_name << '\n';
      std::cerr << r.error_name << ": " << variants[i] << ": " << r.error << "\n";
      code = kRuntime;
    }
  }
  write_file(dir / "compare_metrics.csv", table.str());

  // Aligned traces: one block of columns per variant.
  if (cfg.write_csv) {
    std::ostringstream s;
    s << 't';
    for (std::size_t i = 0; i < variants.size(); ++i) {
      const std::string p = variants[i] + ":";
      s << ',' << p << "h," << p << "q1," << p << "q2," << p << "q3," << p << "us1," << p
        << "us2," << p << "us3";
    }
    s << '\n';
    const std::size_t rows = base.samples() + 1;
    char buf[32];
    const auto put = [&](double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      s << ',' << buf;
    };
    for (std::size_t k = 0; k < rows; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(k) * base.control_dt);
      s << buf;
      for (const BatchResult& r : results) {
        if (!r.outcome || k >= r.outcome->trace.rows.size()) {
          s << ",,,,,,,";
          continue;
        }
        const TraceRow& row = r.outcome->trace.rows[k];
        if (row.h) {
          put(*row.h);
        } else {
          s << ',';
        }
        for (int j = 0; j < 3; ++j) put(row.q[j]);
        for (int j = 0; j < 3; ++j) put(row.u_safe[j]);
      }
      s << '\n';
    }
    write_file(dir / "compare.csv", s.str());
  }

  if (cfg.plots) {
    PlotSpec h{"h(t) by filter: " + base.name, "t (s)", "h (m)", {}, 0.0};
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].outcome) continue;
      h.series.push_back(series(results[i].outcome->trace, variants[i],
                                [](const TraceRow& r) { return opt_or_nan(r.h); }));
    }
    write_file(dir / "compare_h.svg", render_svg(h));
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].outcome) {
        write_run_plots(dir, std::to_string(i) + "_" + variants[i] + "_", *results[i].outcome);
      }
    }
  }

  if (bounds) {
    const BoundTable t = bound_comparison(base);
    std::ostringstream s;
    s << "t,true1,true2,true3,nominal1,nominal2,nominal3,eso1,eso2,eso3\n";
    char buf[32];
    const auto put = [&](const std::optional<double>& v) {
      s << ',';
      if (v) {
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        s << buf;
      }
    };
    for (const BoundSample& b : t.samples) {
      std::snprintf(buf, sizeof buf, "%.17g", b.t);
      s << buf;
      for (const auto* set : {&b.true_f, &b.nominal, &b.eso}) {
        for (int j = 0; j < 3; ++j) put((*set)[j]);
      }
      s << '\n';
    }
    write_file(dir / "bounds.csv", s.str());
    std::cout << "control-bound comparison on " << base.name << "\n  sup gap nominal "
              << fmt(t.sup_gap_nominal) << "\n  sup gap ESO     " << fmt(t.sup_gap_eso)
              << "\n  ESO closer at   " << fmt(t.eso_closer_fraction) << " of samples\n";
    if (cfg.plots) {
      for (int j = 0; j < 3; ++j) {
        const std::string jj = std::to_string(j + 1);
        PlotSpec p{"Control bound on joint " + jj + ": " + base.name, "t (s)", "rad/s", {},
                   std::nullopt};
        const std::array<std::pair<std::string, std::array<std::optional<double>, 3> BoundSample::*>, 3>
            sets{{{"true model", &BoundSample::true_f},
                  {"nominal model", &BoundSample::nominal},
                  {"nominal + ESO", &BoundSample::eso}}};
        for (const auto& [label, member] : sets) {
          PlotSeries ps{label, {}, {}};
          for (const BoundSample& b : t.samples) {
            ps.x.push_back(b.t);
            ps.y.push_back(opt_or_nan((b.*member)[j]));
          }
          p.series.push_back(std::move(ps));
        }
        write_file(dir / ("bounds_joint" + jj + ".svg"), render_svg(p));
      }
    }
  }
  return code;
}

int cmd_list(bool keys) {
  if (keys) {
    for (const ConfigKey& k : config_keys()) {
      std::cout << k.key << "  (" << k.type << ")  " << k.help << "\n";
    }
    return kOk;
  }
  std::cout << "scenarios:\n";
  for (const Scenario& s : builtin_scenarios()) {
    std::printf("  %-26s %s\n", s.name.c_str(), s.description.c_str());
  }
  std::cout << "sweeps:\n";
  for (const SweepSpec& s : builtin_sweeps()) {
    std::printf("  %-26s %s\n", s.name.c_str(), s.description.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-architecture arm: ESO tracking and robust CBF safety filter"};
  app.require_subcommand(1);

  Common sim_opts;
  bool print_config = false;
  auto* sim = app.add_subcommand("simulate", "run one scenario, write trace.csv and metrics.json");
  add_common(sim, sim_opts);
  sim->add_flag("--print-config", print_config, "print the resolved scenario and exit");

  Common sweep_opts;
  std::string sweep_name, param;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "vary one config key, write sweep.csv");
  add_common(sweep, sweep_opts);
  sweep->add_option("--sweep", sweep_name, "builtin sweep name (see list-scenarios)");
  sweep->add_option("-p,--param", param, "dotted config key");
  sweep->add_option("-v,--values", values, "comma-separated values")
      ->delimiter(',')
      ->check(CLI::Number);

  std::vector<double> omega, l_f;
  double t_s = 1e-4;
  int r_i = 1;
  auto* bound = app.add_subcommand("bound", "print the ESO estimation error bound per joint");
  bound->add_option("--omega", omega, "observer bandwidth(s), rad/s")->required()->delimiter(',');
  bound->add_option("--ts", t_s, "sample time (s)")->capture_default_str();
  bound->add_option("--lf", l_f, "disturbance rate bound(s)")->required()->delimiter(',');
  bound->add_option("--r", r_i, "relative degree")->capture_default_str();

  Common cmp_opts;
  std::vector<std::string> variants;
  bool bounds = false;
  auto* cmp = app.add_subcommand("compare", "run several filter variants on one scenario");
  add_common(cmp, cmp_opts, false);
  cmp->add_option("--variants", variants, "comma-separated filter variants")
      ->required()
      ->delimiter(',');
  cmp->add_flag("--bounds", bounds, "also tabulate true/nominal/ESO control bounds");

  bool keys = false;
  auto* list = app.add_subcommand("list-scenarios", "list builtin scenarios and sweeps");
  list->add_flag("--keys", keys, "list the documented config keys instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_opts, print_config);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_name, param, values);
    if (*bound) return cmd_bound(omega, t_s, l_f, r_i);
    if (*cmp) return cmd_compare(cmp_opts, variants, bounds);
    if (*list) return cmd_list(keys);
  } catch (const ConfigError& e) {
    std::cerr << e.name() << ": " << e.what() << "\n";
    return kUsage;
  } catch (const Fault& e) {
    std::cerr << e.name() << ": " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "internal-error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
