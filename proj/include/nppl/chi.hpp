#pragma once

// Regularization weights chi: nondecreasing convex functions bounded below
// that tighten to t. Carries chi', chi'' and the second-derivative measure
// g(s) = chi''(-s) after the normalization chi(0) = 0, chi'(0) = 1, under
// which g(s) ds is a probability measure on [0, inf) and
//   chi(t) = int_0^inf max(t, -s) g(s) ds.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace nppl {

struct ChiFunction {
  enum class Kind { HardMax, SmoothMax, LogExp };
  Kind kind = Kind::HardMax;
  double ell = 1.0;    // HardMax / SmoothMax
  double delta = 0.0;  // SmoothMax
  double eps = 0.0;    // LogExp

  static ChiFunction hard_max(double ell) {
    ChiFunction c; c.kind = Kind::HardMax; c.ell = ell; return c;
  }
  static ChiFunction smooth_max(double ell, double delta) {
    if (!(delta > 0)) throw std::invalid_argument("ChiFunction: SmoothMax needs delta > 0");
    ChiFunction c; c.kind = Kind::SmoothMax; c.ell = ell; c.delta = delta; return c;
  }
  static ChiFunction log_exp(double eps) {
    if (!(eps > 0)) throw std::invalid_argument("ChiFunction: LogExp needs eps > 0");
    ChiFunction c; c.kind = Kind::LogExp; c.eps = eps; return c;
  }

  double value(double t) const {
    switch (kind) {
      case Kind::HardMax: return std::max(t, -ell);
      case Kind::SmoothMax: return 0.5 * (t - ell + std::sqrt((t + ell) * (t + ell) + delta * delta));
      case Kind::LogExp: return t < 500 ? std::log(std::exp(t) + eps) : t;
    }
    return 0;
  }

  double d1(double t) const {
    switch (kind) {
      case Kind::HardMax: return t >= -ell ? 1.0 : 0.0;  // left derivative at the kink is 0
      case Kind::SmoothMax: {
        double s = t + ell;
        return 0.5 * (1.0 + s / std::sqrt(s * s + delta * delta));
      }
      case Kind::LogExp: {
        if (t > 500) return 1.0;
        double e = std::exp(t);
        return e / (e + eps);
      }
    }
    return 0;
  }

  double d2(double t) const {
    switch (kind) {
      case Kind::HardMax: return 0.0;  // Dirac at t = -ell, handled separately
      case Kind::SmoothMax: {
        double s = t + ell;
        double q = std::sqrt(s * s + delta * delta);
        return 0.5 * delta * delta / (q * q * q);
      }
      case Kind::LogExp: {
        if (t > 500) return 0.0;
        double e = std::exp(t);
        return eps * e / ((e + eps) * (e + eps));
      }
    }
    return 0;
  }

  bool smooth() const { return kind != Kind::HardMax; }

  // Normalized variant hat{chi} = (chi - chi(0)) / chi'(0).
  double norm_value(double t) const { return (value(t) - value(0.0)) / d1(0.0); }
  double norm_d1(double t) const { return d1(t) / d1(0.0); }
  double norm_d2(double t) const { return d2(t) / d1(0.0); }

  // g(s) = hat{chi}''(-s), s >= 0.
  double g(double s) const { return norm_d2(-s); }

  // Exact total mass of g on [0, S]: hat{chi}'(0) - hat{chi}'(-S).
  double g_mass(double S) const { return 1.0 - norm_d1(-S); }
};

// Adaptive Simpson quadrature (plain recursive bisection on the error
// estimate); used as the independent oracle for the superposition identity.
// min_depth forces that many initial subdivisions so narrow interior layers
// cannot be skipped by an early coarse-grid agreement.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 40, int min_depth = 0);

struct ChiSuperpositionReport {
  double max_residual = 0.0;   // max_t | chi(t) - int max(t,-s) g(s) ds |
  double total_mass = 0.0;     // quadrature of int_0^inf g(s) ds (analytic tail)
  double mass_defect = 0.0;    // |total_mass - 1|
};

// Verifies chi(t) = int_0^infty max(t, -s) g(s) ds on the given samples
// (normalized chi). Rejects non-convex chi (negative g mass detected).
ChiSuperpositionReport chi_superposition_residual(const ChiFunction& chi, const std::vector<double>& samples,
                                                  double quad_tol = 1e-10);

}  // namespace nppl
