#include "nppl/chi.hpp"

#include <cmath>

namespace nppl {

namespace {
double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_rec(const std::function<double(double)>& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double tol, int depth, int force) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, fa, m, fm, flm);
  double right = simpson(m, fm, b, fb, frm);
  double delta = left + right - whole;
  if (depth <= 0 || (force <= 0 && std::abs(delta) <= 15.0 * tol)) return left + right + delta / 15.0;
  return adaptive_rec(f, a, fa, m, fm, lm, flm, left, tol / 2, depth - 1, force - 1) +
         adaptive_rec(f, m, fm, b, fb, rm, frm, right, tol / 2, depth - 1, force - 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth,
                        int min_depth) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson(a, fa, b, fb, fm);
  return adaptive_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth, min_depth);
}

ChiSuperpositionReport chi_superposition_residual(const ChiFunction& chi, const std::vector<double>& samples,
                                                  double quad_tol) {
  ChiSuperpositionReport rep;

  if (chi.kind == ChiFunction::Kind::HardMax) {
    // g is the Dirac mass at s = ell; the identity is exact.
    rep.total_mass = 1.0;
    rep.mass_defect = 0.0;
    rep.max_residual = 0.0;
    return rep;
  }

  // Reject non-convex input: g must be nonnegative.
  for (double s = 0.0; s <= 64.0; s += 0.25)
    if (chi.g(s) < -1e-14) throw std::invalid_argument("chi_superposition_residual: negative g mass (non-convex chi)");

  // Far cutoff: beyond S the tail is handled analytically via
  // int_S^inf g = hat{chi}'(-S) and max(t,-s) = t for s > -t.
  double S = 64.0;
  switch (chi.kind) {
    case ChiFunction::Kind::SmoothMax:
      S = std::max(64.0, 2.0 * chi.ell + 64.0 * chi.delta);
      break;
    case ChiFunction::Kind::LogExp:
      S = std::max(64.0, -std::log(chi.eps) + 64.0);
      break;
    default:
      break;
  }
  for (double t : samples) S = std::max(S, 2.0 * std::abs(t) + 8.0);

  rep.total_mass = adaptive_simpson([&](double s) { return chi.g(s); }, 0.0, S, quad_tol) + chi.norm_d1(-S);
  rep.mass_defect = std::abs(rep.total_mass - 1.0);

  for (double t : samples) {
    double quad = adaptive_simpson([&](double s) { return std::max(t, -s) * chi.g(s); }, 0.0, S, quad_tol);
    double tail = t * chi.norm_d1(-S);  // s > S >= -t there, so max(t,-s) = t
    double resid = std::abs(chi.norm_value(t) - (quad + tail));
    rep.max_residual = std::max(rep.max_residual, resid);
  }
  return rep;
}

}  // namespace nppl
