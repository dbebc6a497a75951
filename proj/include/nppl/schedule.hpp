#pragma once

// Cutoff schedules discretizing lim_{l -> inf}, mass reports with
// convergence verdicts, and the extrapolation/fit policies. The paper only
// provides existence of limits, never rates, so the thresholds here are
// explicit: "converged" needs the last three masses within
// max(1e-4 |m|, 1e-8) plus an extrapolated limit with residual below the
// same bound; "diverging" needs a log-log fit over >= 4 points with
// R^2 >= 0.98.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nppl/grid.hpp"
#include "nppl/psh.hpp"

namespace nppl {

struct CutoffSchedule {
  std::vector<double> ell;    // strictly increasing cutoff levels
  std::vector<double> delta;  // smoothing per level (SmoothMax), -> 0
  PshSpec gauge;              // masks are {gauge > -ell}; defaults to u itself

  static CutoffSchedule geometric(double ell0, double factor, int count, double delta0 = 0.0,
                                  double delta_factor = 0.5) {
    CutoffSchedule s;
    double l = ell0, d = delta0;
    for (int i = 0; i < count; ++i) {
      s.ell.push_back(l);
      s.delta.push_back(d);
      l *= factor;
      d *= delta_factor;
    }
    return s;
  }

  static CutoffSchedule linear(double ell0, double step, int count) {
    CutoffSchedule s;
    for (int i = 0; i < count; ++i) {
      s.ell.push_back(ell0 + step * i);
      s.delta.push_back(0.0);
    }
    return s;
  }

  void validate() const {
    if (ell.empty()) throw std::invalid_argument("CutoffSchedule: empty");
    for (std::size_t i = 1; i < ell.size(); ++i)
      if (!(ell[i] > ell[i - 1])) throw std::invalid_argument("CutoffSchedule: ell must be strictly increasing");
    if (delta.size() != ell.size()) throw std::invalid_argument("CutoffSchedule: delta size mismatch");
  }
};

struct Verdict {
  enum class Kind { Converged, Diverging, Inconclusive };
  Kind kind = Kind::Inconclusive;
  double limit = 0.0;      // Converged
  double error = 0.0;      // Converged: extrapolation residual bound
  double exponent = 0.0;   // Diverging: power of ell
  double fit_r2 = 0.0;     // Diverging
  double fit_residual = 0.0;

  bool converged() const { return kind == Kind::Converged; }
  bool diverging() const { return kind == Kind::Diverging; }
  std::string name() const {
    switch (kind) {
      case Kind::Converged: return "converged";
      case Kind::Diverging: return "diverging";
      case Kind::Inconclusive: return "inconclusive";
    }
    return "?";
  }
};

struct MassReport {
  std::vector<double> ell;
  std::vector<double> mass;
  std::vector<std::string> flags;  // per-ell flags ("" when clean)
  Verdict verdict;
  std::string extrapolation_method;  // "aitken" or "last"

  // Entries excluded from extrapolation (corner-layer rule etc).
  bool excluded(std::size_t i) const { return !flags[i].empty(); }
};

// Convergence policy applied to a finished (ell, mass) table.
Verdict assess_convergence(const std::vector<double>& ell, const std::vector<double>& mass,
                           const std::vector<std::string>& flags, std::string* method = nullptr);

// Least-squares fit of log(mass) = a + p log(ell) on positive entries;
// returns (p, r2, max residual).
bool loglog_fit(const std::vector<double>& ell, const std::vector<double>& mass, double& p, double& r2,
                double& resid);

}  // namespace nppl
