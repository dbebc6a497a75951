#pragma once

// Experiment report emission: schema-versioned JSON ("nppl-report/1"), CSV
// mirrors (one row per ell), and self-contained SVG line plots drawn with
// polyline/axis primitives. Reports are deterministic: timestamps and
// wall-clock data go to a sibling .meta.json, never into the report itself.

#include <string>
#include <vector>

#include "json.hpp"
#include "nppl/schedule.hpp"

namespace nppl {

inline constexpr const char* kReportSchema = "nppl-report/1";

std::uint64_t fnv1a(const std::string& text);

struct ReportWriter {
  std::string out_dir;
  std::string experiment;
  nlohmann::json config;
  nlohmann::json tolerances;
  nlohmann::json results;
  std::vector<std::string> flags;

  // Writes <out>/<experiment>.json (+ .csv/.svg per format) and
  // <out>/<experiment>.meta.json with timing. format: json|csv|svg|all.
  void write(const std::string& format, double wall_seconds) const;

  static nlohmann::json mass_report_json(const MassReport& rep);
  static std::string mass_report_csv(const MassReport& rep);
};

// Polyline SVG of (x, y) series, log-log when requested.
std::string svg_line_plot(const std::vector<double>& x, const std::vector<std::vector<double>>& series,
                          const std::vector<std::string>& labels, const std::string& title, bool loglog);

// Content-addressed cache of scalar fields keyed by (spec hash, grid hash).
struct FieldCache {
  std::string dir;
  bool enabled = true;
  std::string path_for(std::uint64_t key) const;
  bool load(std::uint64_t key, ScalarField& out) const;
  void store(std::uint64_t key, const ScalarField& f) const;
};

std::uint64_t grid_hash(const GridDomain& d);

}  // namespace nppl
