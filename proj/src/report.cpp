#include "nppl/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nppl/field_ops.hpp"

namespace nppl {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t grid_hash(const GridDomain& d) {
  std::ostringstream os;
  os << d.n << ":" << d.points_per_axis;
  for (int j = 0; j < d.n; ++j)
    os << ":" << d.center[static_cast<std::size_t>(j)].real() << "," << d.center[static_cast<std::size_t>(j)].imag()
       << "," << d.radii[static_cast<std::size_t>(j)];
  return fnv1a(os.str());
}

json ReportWriter::mass_report_json(const MassReport& rep) {
  json j;
  j["ell"] = rep.ell;
  j["mass"] = rep.mass;
  j["flags"] = rep.flags;
  json v;
  v["kind"] = rep.verdict.name();
  if (rep.verdict.converged()) {
    v["limit"] = rep.verdict.limit;
    v["error"] = rep.verdict.error;
  } else if (rep.verdict.diverging()) {
    v["exponent"] = rep.verdict.exponent;
    v["r2"] = rep.verdict.fit_r2;
    v["fit_residual"] = rep.verdict.fit_residual;
  }
  j["verdict"] = v;
  j["extrapolation"] = {{"method", rep.extrapolation_method}};
  return j;
}

std::string ReportWriter::mass_report_csv(const MassReport& rep) {
  std::ostringstream os;
  os << "ell,mass,flag\n";
  os.precision(17);
  for (std::size_t i = 0; i < rep.ell.size(); ++i)
    os << rep.ell[i] << "," << rep.mass[i] << "," << rep.flags[i] << "\n";
  return os.str();
}

void ReportWriter::write(const std::string& format, double wall_seconds) const {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  json doc;
  doc["schema"] = kReportSchema;
  doc["experiment"] = experiment;
  doc["config"] = config;
  doc["config_hash"] = fnv1a(config.dump());
  doc["tolerances"] = tolerances;
  doc["results"] = results;
  doc["flags"] = flags;

  bool all = format == "all";
  if (all || format == "json") {
    std::ofstream os(out_dir + "/" + experiment + ".json");
    os << doc.dump(2) << "\n";
  }
  {
    json meta;
    meta["wall_seconds"] = wall_seconds;
    std::ofstream os(out_dir + "/" + experiment + ".meta.json");
    os << meta.dump(2) << "\n";
  }
  if ((all || format == "csv") && results.contains("trace")) {
    std::ofstream os(out_dir + "/" + experiment + ".csv");
    os << "ell,value\n";
    auto& tr = results["trace"];
    auto& ell = tr["ell"];
    auto& mass = tr.contains("mass") ? tr["mass"] : tr["value"];
    os.precision(17);
    for (std::size_t i = 0; i < ell.size(); ++i)
      os << ell[i].get<double>() << "," << mass[i].get<double>() << "\n";
  }
  if ((all || format == "svg") && results.contains("trace")) {
    auto& tr = results["trace"];
    std::vector<double> x = tr["ell"].get<std::vector<double>>();
    std::vector<double> y =
        (tr.contains("mass") ? tr["mass"] : tr["value"]).get<std::vector<double>>();
    std::ofstream os(out_dir + "/" + experiment + ".svg");
    os << svg_line_plot(x, {y}, {"mass"}, experiment, false);
  }
}

std::string svg_line_plot(const std::vector<double>& x, const std::vector<std::vector<double>>& series,
                          const std::vector<std::string>& labels, const std::string& title, bool loglog) {
  const double W = 640, H = 420, ml = 60, mr = 20, mt = 40, mb = 50;
  auto tx = [&](double v) { return loglog && v > 0 ? std::log10(v) : v; };
  double xmin = 1e308, xmax = -1e308, ymin = 1e308, ymax = -1e308;
  for (double v : x) {
    xmin = std::min(xmin, tx(v));
    xmax = std::max(xmax, tx(v));
  }
  for (auto& s : series)
    for (double v : s) {
      ymin = std::min(ymin, tx(v));
      ymax = std::max(ymax, tx(v));
    }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (tx(v) - ymin) / (ymax - ymin) * (H - mt - mb); };
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title << "</text>\n";
  os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
     << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb << "' stroke='black'/>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill='none' stroke='" << colors[s % 4] << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < x.size() && i < series[s].size(); ++i)
      os << px(x[i]) << "," << py(series[s][i]) << " ";
    os << "'/>\n";
    if (s < labels.size())
      os << "<text x='" << W - mr - 150 << "' y='" << mt + 16 * (s + 1) << "' fill='" << colors[s % 4]
         << "' font-size='12'>" << labels[s] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string FieldCache::path_for(std::uint64_t key) const {
  std::ostringstream os;
  os << dir << "/" << std::hex << key << ".field";
  return os.str();
}

bool FieldCache::load(std::uint64_t key, ScalarField& out) const {
  if (!enabled) return false;
  std::string p = path_for(key);
  if (!std::filesystem::exists(p)) return false;
  out = load_field(p);
  return true;
}

void FieldCache::store(std::uint64_t key, const ScalarField& f) const {
  if (!enabled) return;
  std::filesystem::create_directories(dir);
  save_field(f, path_for(key));
}

}  // namespace nppl
