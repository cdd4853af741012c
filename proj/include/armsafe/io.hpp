#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "armsafe/harness.hpp"

namespace armsafe {

inline constexpr std::string_view kTraceHeader =
    "t,q1,q2,q3,dq1,dq2,dq3,qs1,qs2,qs3,qd1,qd2,qd3,us1,us2,us3,f1,f2,f3,"
    "fh1,fh2,fh3,h,hdot,slack,lb1,lb2,lb3";

/// %.17g per field, so reading back reproduces every double exactly.
/// Undefined values are empty fields.
void write_trace_csv(std::ostream& out, const Trace& trace);
/// Throws ConfigError on a wrong header or a malformed row.
Trace read_trace_csv(std::istream& in);

/// JSON object with joint_rmse, cartesian_rmse, min_h, transient_time and
/// intervention_fraction; undefined values are null.
std::string metrics_to_json(const Metrics& m);
Metrics metrics_from_json(std::string_view text);

/// Column names shared by the sweep and compare summary tables, after the
/// leading label column.
inline constexpr std::string_view kMetricsColumns =
    "joint_rmse1,joint_rmse2,joint_rmse3,cartesian_rmse1,cartesian_rmse2,"
    "cartesian_rmse3,min_h,transient_time,intervention_fraction";
/// One CSV row fragment matching kMetricsColumns.
std::string metrics_csv_fields(const Metrics& m);

// ---------------------------------------------------------------------------
// Static SVG line charts.

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the line (undefined samples)
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  /// Horizontal reference line, e.g. the wall at h = 0.
  std::optional<double> reference_line;
};

std::string render_svg(const PlotSpec& spec);

}  // namespace armsafe
