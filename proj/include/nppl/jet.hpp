#pragma once

// Second-order jets of real-valued functions on C^n: value, holomorphic
// gradient g_j = du/dz_j, and complex Hessian H_jk = d^2u/dz_j dzbar_k.
// For real u the antiholomorphic gradient is conj(g), so this triple composes
// through sums, products, smooth scalar functions and (smooth) maxima.

#include <array>
#include <cmath>

#include "nppl/grid.hpp"

namespace nppl {

using CVec = std::array<complexd, kMaxDim>;

struct Jet2 {
  int n = 0;
  bool finite = true;  // finite == false means value is -infinity
  double v = 0.0;
  CVec g{};
  HMat h;

  static Jet2 bottom(int n) {
    Jet2 j;
    j.n = n;
    j.finite = false;
    j.v = kBottom;
    j.h = HMat(n);
    return j;
  }

  static Jet2 constant(int n, double c) {
    Jet2 j;
    j.n = n;
    j.v = c;
    j.h = HMat(n);
    return j;
  }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  if (!a.finite || !b.finite) return Jet2::bottom(a.n);
  Jet2 r = a;
  r.v += b.v;
  for (int j = 0; j < a.n; ++j) r.g[static_cast<std::size_t>(j)] += b.g[static_cast<std::size_t>(j)];
  r.h += b.h;
  return r;
}

inline Jet2 scale(const Jet2& a, double s) {
  if (!a.finite) {
    if (s > 0) return a;
    // Scaling BOTTOM by a non-positive factor has no meaning in the catalog.
    Jet2 r = Jet2::bottom(a.n);
    return r;
  }
  Jet2 r = a;
  r.v *= s;
  for (int j = 0; j < a.n; ++j) r.g[static_cast<std::size_t>(j)] *= s;
  r.h *= s;
  return r;
}

// Hermitian rank-one update H += s * (x ybar^T + y xbar^T)/symmetrized.
inline void add_sym_outer(HMat& h, const CVec& x, const CVec& y, double s) {
  for (int j = 0; j < h.n; ++j)
    for (int k = 0; k < h.n; ++k)
      h.at(j, k) += s * (x[static_cast<std::size_t>(j)] * std::conj(y[static_cast<std::size_t>(k)]) +
                         y[static_cast<std::size_t>(j)] * std::conj(x[static_cast<std::size_t>(k)]));
}

inline void add_outer(HMat& h, const CVec& x, double s) {
  for (int j = 0; j < h.n; ++j)
    for (int k = 0; k < h.n; ++k)
      h.at(j, k) += s * x[static_cast<std::size_t>(j)] * std::conj(x[static_cast<std::size_t>(k)]);
}

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  if (!a.finite || !b.finite) return Jet2::bottom(a.n);
  Jet2 r;
  r.n = a.n;
  r.v = a.v * b.v;
  r.h = HMat(a.n);
  for (int j = 0; j < a.n; ++j)
    r.g[static_cast<std::size_t>(j)] = a.v * b.g[static_cast<std::size_t>(j)] + b.v * a.g[static_cast<std::size_t>(j)];
  r.h += a.v * b.h;
  r.h += b.v * a.h;
  add_sym_outer(r.h, a.g, b.g, 1.0);
  return r;
}

// Composition with a C^2 scalar function c: r = c(a), given c(v), c'(v), c''(v).
inline Jet2 compose(const Jet2& a, double c, double dc, double ddc) {
  if (!a.finite) return Jet2::bottom(a.n);
  Jet2 r;
  r.n = a.n;
  r.v = c;
  for (int j = 0; j < a.n; ++j) r.g[static_cast<std::size_t>(j)] = dc * a.g[static_cast<std::size_t>(j)];
  r.h = HMat(a.n);
  r.h += dc * a.h;
  add_outer(r.h, a.g, ddc);
  return r;
}

// Smooth maximum m_delta(a,b) = (a + b + sqrt((a-b)^2 + delta^2)) / 2.
// Convex, >= max(a,b), <= max(a,b) + delta/2. delta == 0 gives the exact max
// (jet of the active branch; ties pick a).
inline Jet2 smooth_max(const Jet2& a, const Jet2& b, double delta) {
  if (!a.finite && !b.finite) return Jet2::bottom(a.n);
  if (delta <= 0.0 || !a.finite || !b.finite) {
    if (!a.finite) return b;
    if (!b.finite) return a;
    return a.v >= b.v ? a : b;
  }
  double s = a.v - b.v;
  double q = std::sqrt(s * s + delta * delta);
  double m = 0.5 * (a.v + b.v + q);
  double ma = 0.5 * (1.0 + s / q);            // dm/da
  double mb = 0.5 * (1.0 - s / q);            // dm/db
  double w = 0.5 * delta * delta / (q * q * q);  // d2m/da2 = d2m/db2 = -d2m/dadb
  Jet2 r;
  r.n = a.n;
  r.v = m;
  for (int j = 0; j < a.n; ++j)
    r.g[static_cast<std::size_t>(j)] = ma * a.g[static_cast<std::size_t>(j)] + mb * b.g[static_cast<std::size_t>(j)];
  r.h = HMat(a.n);
  r.h += ma * a.h;
  r.h += mb * b.h;
  CVec diff{};
  for (int j = 0; j < a.n; ++j)
    diff[static_cast<std::size_t>(j)] = a.g[static_cast<std::size_t>(j)] - b.g[static_cast<std::size_t>(j)];
  add_outer(r.h, diff, w);
  return r;
}

}  // namespace nppl
