#include "armsafe/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "armsafe/errors.hpp"

namespace armsafe {

namespace {

void put(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

void put(std::string& line, const std::optional<double>& v) {
  if (v) put(line, *v);
}

void put(std::string& line, const Vec3& v) {
  for (int i = 0; i < 3; ++i) {
    if (i) line += ',';
    put(line, v[i]);
  }
}

std::optional<double> field(std::string_view s, long row) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("trace row " + std::to_string(row) + ": bad number '" +
                      std::string(s) + "'");
  }
  return v;
}

double required(std::string_view s, long row) {
  const auto v = field(s, row);
  if (!v) throw ConfigError("trace row " + std::to_string(row) + ": missing value");
  return *v;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  std::string line;
  for (const TraceRow& r : trace.rows) {
    line.clear();
    put(line, r.t);
    for (const Vec3* v : {&r.q, &r.dq, &r.q_ref, &r.dq_d, &r.u_safe, &r.f_true, &r.f_hat}) {
      line += ',';
      put(line, *v);
    }
    for (const auto* v : {&r.h, &r.h_dot, &r.slack, &r.bound[0], &r.bound[1], &r.bound[2]}) {
      line += ',';
      put(line, *v);
    }
    line += '\n';
    out << line;
  }
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ConfigError("trace: unexpected header");
  }
  Trace trace;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (;;) {
      const auto pos = rest.find(',');
      f.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (f.size() != 28) {
      throw ConfigError("trace row " + std::to_string(row) + ": expected 28 fields");
    }
    TraceRow r;
    r.t = required(f[0], row);
    Vec3* vecs[] = {&r.q, &r.dq, &r.q_ref, &r.dq_d, &r.u_safe, &r.f_true, &r.f_hat};
    for (int v = 0; v < 7; ++v) {
      for (int i = 0; i < 3; ++i) (*vecs[v])[i] = required(f[1 + 3 * v + i], row);
    }
    r.h = field(f[22], row);
    r.h_dot = field(f[23], row);
    r.slack = field(f[24], row);
    for (int i = 0; i < 3; ++i) r.bound[i] = field(f[25 + i], row);
    trace.rows.push_back(r);
  }
  return trace;
}

std::string metrics_to_json(const Metrics& m) {
  using nlohmann::json;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  const auto vec = [](const Vec3& v) { return json::array({v[0], v[1], v[2]}); };
  json j;
  j["joint_rmse"] = vec(m.joint_rmse);
  j["cartesian_rmse"] = vec(m.cartesian_rmse);
  j["min_h"] = opt(m.min_h);
  j["transient_time"] = opt(m.transient_time);
  j["intervention_fraction"] = m.intervention_fraction;
  return j.dump(2) + "\n";
}

Metrics metrics_from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    Metrics m;
    for (int i = 0; i < 3; ++i) {
      m.joint_rmse[i] = j.at("joint_rmse").at(i).get<double>();
      m.cartesian_rmse[i] = j.at("cartesian_rmse").at(i).get<double>();
    }
    if (!j.at("min_h").is_null()) m.min_h = j["min_h"].get<double>();
    if (!j.at("transient_time").is_null()) m.transient_time = j["transient_time"].get<double>();
    m.intervention_fraction = j.at("intervention_fraction").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("metrics json: ") + e.what());
  }
}

std::string metrics_csv_fields(const Metrics& m) {
  std::string line;
  put(line, m.joint_rmse);
  line += ',';
  put(line, m.cartesian_rmse);
  line += ',';
  put(line, m.min_h);
  line += ',';
  put(line, m.transient_time);
  line += ',';
  put(line, m.intervention_fraction);
  return line;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kWidth = 800, kHeight = 420;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 55;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Round step for about `n` ticks over [lo, hi].
double tick_step(double lo, double hi, int n) {
  const double raw = (hi - lo) / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const PlotSeries& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (spec.reference_line) {
    y0 = std::min(y0, *spec.reference_line);
    y1 = std::max(y1, *spec.reference_line);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(spec.title) << "</text>\n";

  const double xs = tick_step(x0, x1, 8), ys = tick_step(y0, y1, 6);
  for (double v = std::ceil(x0 / xs) * xs; v <= x1 + 1e-9 * xs; v += xs) {
    o << "<line x1=\"" << num(px(v)) << "\" y1=\"" << kTop << "\" x2=\"" << num(px(v))
      << "\" y2=\"" << kTop + ph << "\" stroke=\"#e5e5e5\"/>\n";
    o << "<text x=\"" << num(px(v)) << "\" y=\"" << kTop + ph + 16
      << "\" text-anchor=\"middle\">" << num(std::abs(v) < 1e-12 * xs ? 0.0 : v) << "</text>\n";
  }
  for (double v = std::ceil(y0 / ys) * ys; v <= y1 + 1e-9 * ys; v += ys) {
    o << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(v)) << "\" x2=\"" << kLeft + pw
      << "\" y2=\"" << num(py(v)) << "\" stroke=\"#e5e5e5\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(v) + 4)
      << "\" text-anchor=\"end\">" << num(std::abs(v) < 1e-12 * ys ? 0.0 : v) << "</text>\n";
  }
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
    << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << kTop + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

  if (spec.reference_line) {
    o << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(*spec.reference_line)) << "\" x2=\""
      << kLeft + pw << "\" y2=\"" << num(py(*spec.reference_line))
      << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  }

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const PlotSeries& s = spec.series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string d;
    bool pen_down = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen_down = false;
        continue;
      }
      d += pen_down ? " L" : " M";
      d += num(px(s.x[i])) + "," + num(py(s.y[i]));
      pen_down = true;
    }
    if (!d.empty()) {
      o << "<path d=\"" << d.substr(1) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 36
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << kLeft + pw + 42 << "\" y=\"" << ly + 4 << "\">" << escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace armsafe
