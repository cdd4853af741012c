#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <string>

#include "armsafe/config.hpp"
#include "armsafe/errors.hpp"
#include "armsafe/eso.hpp"
#include "armsafe/harness.hpp"
#include "armsafe/io.hpp"

namespace py = pybind11;
using namespace armsafe;

namespace {

py::object opt(const std::optional<double>& v) {
  return v ? py::object(py::float_(*v)) : py::object(py::none());
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["joint_rmse"] = std::vector<double>(m.joint_rmse.begin(), m.joint_rmse.end());
  d["cartesian_rmse"] = std::vector<double>(m.cartesian_rmse.begin(), m.cartesian_rmse.end());
  d["min_h"] = opt(m.min_h);
  d["transient_time"] = opt(m.transient_time);
  d["intervention_fraction"] = m.intervention_fraction;
  return d;
}

// Rows x 28 in trace CSV column order; undefined entries are NaN.
py::array_t<double> trace_array(const Trace& t) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  py::array_t<double> a({static_cast<py::ssize_t>(t.rows.size()), py::ssize_t{28}});
  auto m = a.mutable_unchecked<2>();
  for (py::ssize_t k = 0; k < static_cast<py::ssize_t>(t.rows.size()); ++k) {
    const TraceRow& r = t.rows[static_cast<std::size_t>(k)];
    py::ssize_t c = 0;
    m(k, c++) = r.t;
    for (const Vec3* v : {&r.q, &r.dq, &r.q_ref, &r.dq_d, &r.u_safe, &r.f_true, &r.f_hat}) {
      for (int i = 0; i < 3; ++i) m(k, c++) = (*v)[i];
    }
    for (const auto* v : {&r.h, &r.h_dot, &r.slack, &r.bound[0], &r.bound[1], &r.bound[2]}) {
      m(k, c++) = v->value_or(nan);
    }
  }
  return a;
}

py::dict simulate(const std::string& scenario, const std::string& document,
                  const std::map<std::string, std::string>& overrides) {
  Scenario scn;
  if (!document.empty()) {
    scn = scenario_from_document(document);
  } else {
    scn = find_scenario(scenario);
  }
  for (const auto& [k, v] : overrides) set_config_value(scn, k, v);
  try {
    scn.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Fault& f) {
    throw ConfigError(std::string(f.name()) + ": " + f.what());
  }
  Outcome out;
  {
    py::gil_scoped_release release;
    out = run_scenario(scn);
  }
  py::dict d;
  d["metrics"] = metrics_dict(out.metrics);
  d["trace"] = trace_array(out.trace);
  d["scenario"] = scenario_to_document(out.scenario);
  d["gamma_bound"] = std::vector<double>(out.diag.gamma_bound.begin(), out.diag.gamma_bound.end());
  return d;
}

}  // namespace

PYBIND11_MODULE(_armsafe, m) {
  m.doc() = "Robust CBF safety filter with ESO disturbance estimation for a 3-DOF arm";

  static py::exception<ConfigError> config_exc(m, "ConfigError", PyExc_ValueError);
  static py::exception<Fault> fault_exc(m, "Fault", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_exc, (std::string(e.name()) + ": " + e.what()).c_str());
    } catch (const Fault& e) {
      py::set_error(fault_exc, (std::string(e.name()) + ": " + e.what()).c_str());
    }
  });

  m.attr("TRACE_COLUMNS") = std::string(kTraceHeader);

  m.def("list_scenarios", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Scenario& s : builtin_scenarios()) out.emplace_back(s.name, s.description);
    return out;
  });
  m.def("config_keys", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const ConfigKey& k : config_keys()) out.emplace_back(k.key, k.type, k.help);
    return out;
  });
  m.def("scenario_document", [](const std::string& name) {
    return scenario_to_document(find_scenario(name));
  }, py::arg("name"));
  m.def("simulate", &simulate, py::arg("scenario") = "", py::arg("document") = "",
        py::arg("overrides") = std::map<std::string, std::string>{},
        "Run a builtin scenario or a YAML/JSON document with dotted-key overrides.");

  m.def("error_bound", [](double omega_o, double t_s, double l_f, int r) {
    BoundSpec spec;
    spec.l_f = l_f;
    spec.t_s = t_s;
    spec.r_i = r;
    spec.omega_discrete = discretize_bandwidth(omega_o, t_s);
    const ErrorBound b = estimation_error_bound(spec);
    return py::make_tuple(b.gamma_bound, b.truncation_terms, b.series_sum);
  }, py::arg("omega_o"), py::arg("t_s"), py::arg("l_f"), py::arg("r") = 1,
        "Returns (Gamma, truncation K, partial sum S_K).");

  m.def("solve_safety_qp", [](const Vec3& u_nominal, const Vec3& a_row, double b,
                              std::optional<Vec3> lower, std::optional<Vec3> upper) {
    SafetyQp qp;
    qp.u_nominal = u_nominal;
    qp.a_row = a_row.transpose();
    qp.b_rhs = b;
    if (lower || upper) {
      const double inf = std::numeric_limits<double>::infinity();
      qp.u_box = InputBox{lower.value_or(Vec3::Constant(-inf)), upper.value_or(Vec3::Constant(inf))};
    }
    return solve_safety_qp(qp);
  }, py::arg("u_nominal"), py::arg("a_row"), py::arg("b"), py::arg("lower") = py::none(),
        py::arg("upper") = py::none());

  m.def("mass_matrix", [](const Vec3& q, double payload) {
    ArmParams a;
    a.payload_mass = payload;
    return mass_matrix(a, q);
  }, py::arg("q"), py::arg("payload_mass") = 0.0);
  m.def("forward_kinematics", [](const Vec3& q) { return forward_kinematics(ArmParams{}, q); },
        py::arg("q"));
  m.def("jacobian", [](const Vec3& q) { return jacobian(ArmParams{}, q); }, py::arg("q"));
}
