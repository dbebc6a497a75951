#include "nppl/schedule.hpp"

#include <algorithm>

namespace nppl {

bool loglog_fit(const std::vector<double>& ell, const std::vector<double>& mass, double& p, double& r2,
                double& resid) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ell.size(); ++i)
    if (mass[i] > 0 && ell[i] > 0) {
      x.push_back(std::log(ell[i]));
      y.push_back(std::log(mass[i]));
    }
  if (x.size() < 4) return false;
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-14) return false;
  p = (n * sxy - sx * sy) / denom;
  double a = (sy - p * sx) / n;
  double ss_res = 0, ss_tot = 0, ybar = sy / n;
  resid = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (a + p * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
    resid = std::max(resid, std::abs(e));
  }
  r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return true;
}

Verdict assess_convergence(const std::vector<double>& ell, const std::vector<double>& mass,
                           const std::vector<std::string>& flags, std::string* method) {
  Verdict v;
  std::vector<double> el, ms;
  for (std::size_t i = 0; i < ell.size(); ++i)
    if (i >= flags.size() || flags[i].empty()) {
      el.push_back(ell[i]);
      ms.push_back(mass[i]);
    }
  if (method) *method = "last";
  if (ms.size() >= 3) {
    std::size_t k = ms.size() - 1;
    double m = ms[k];
    double bound = std::max(1e-4 * std::abs(m), 1e-8);
    if (std::abs(ms[k] - ms[k - 1]) <= bound && std::abs(ms[k - 1] - ms[k - 2]) <= bound) {
      // Aitken extrapolation; falls back to the last value when the
      // second difference is negligible.
      double d1 = ms[k] - ms[k - 1], d2 = ms[k] - 2 * ms[k - 1] + ms[k - 2];
      double limit = ms[k];
      std::string meth = "last";
      if (std::abs(d2) > 1e-300 && std::abs(d1 * d1 / d2) < 10 * bound) {
        limit = ms[k] - d1 * d1 / d2;
        meth = "aitken";
      }
      if (std::abs(limit - ms[k]) <= bound) {
        v.kind = Verdict::Kind::Converged;
        v.limit = limit;
        v.error = std::max(std::abs(limit - ms[k]), std::abs(d1));
        if (method) *method = meth;
        return v;
      }
    }
  }
  // Geometric-increment extrapolation: for m_l = A - B q^l the increments
  // d_i = m_{i+1} - m_i form a geometric sequence; a stable ratio q < 1 gives
  // a Richardson-style limit with an explicit tail bound, a stable ratio
  // q > 1 on a geometric ell-schedule gives the divergence power directly
  // (the increments cancel any additive constant).
  if (ms.size() >= 4) {
    std::size_t n = ms.size();
    std::vector<double> d, r;
    for (std::size_t i = n - 4; i + 1 < n; ++i) d.push_back(ms[i + 1] - ms[i]);
    bool same_sign = (d[0] > 0) == (d[1] > 0) && (d[1] > 0) == (d[2] > 0) && std::abs(d[0]) > 0;
    if (same_sign) {
      double r1 = d[1] / d[0], r2g = d[2] / d[1];
      bool stable = std::abs(r1 - r2g) <= 0.25 * std::max(std::abs(r1), std::abs(r2g));
      double q = 0.5 * (r1 + r2g);
      if (stable && q > 0.02 && q < 0.95) {
        double tail = d.back() * q / (1.0 - q);
        v.kind = Verdict::Kind::Converged;
        v.limit = ms.back() + tail;
        v.error = std::abs(tail) + std::abs(d.back()) * 0.25;
        if (method) *method = "geometric";
        return v;
      }
      if (stable && q > 1.05) {
        double lr1 = el[n - 2] / el[n - 3], lr2 = el[n - 1] / el[n - 2];
        if (lr1 > 1.01 && std::abs(lr1 - lr2) < 0.05 * lr1) {
          v.kind = Verdict::Kind::Diverging;
          v.exponent = std::log(q) / std::log(0.5 * (lr1 + lr2));
          v.fit_r2 = 1.0;
          v.fit_residual = std::abs(r1 - r2g);
          if (method) *method = "increment-ratio";
          return v;
        }
      }
    }
  }
  double p, r2, resid;
  if (loglog_fit(el, ms, p, r2, resid) && r2 >= 0.98 && p > 0.02) {
    v.kind = Verdict::Kind::Diverging;
    v.exponent = p;
    v.fit_r2 = r2;
    v.fit_residual = resid;
    return v;
  }
  v.kind = Verdict::Kind::Inconclusive;
  return v;
}

}  // namespace nppl
