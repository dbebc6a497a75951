#pragma once

// Uniform grids over boxes in C^n (n <= 3), scalar and Hermitian-matrix
// fields with a poisonous BOTTOM (= -inf) value, fractional region masks,
// and the flat binary serialization used by the CLI cache.
//
// Coordinate convention: z_j = x_{2j-1} + i*x_{2j}; real axes are ordered
// (x1, y1, x2, y2, ...) and cells are indexed row-major with the last axis
// fastest. Samples sit at cell midpoints.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nppl/linalg.hpp"

namespace nppl {

inline constexpr double kBottom = -std::numeric_limits<double>::infinity();

struct GridDomain {
  int n = 1;  // complex dimension, 1..3
  std::array<complexd, kMaxDim> center{};
  std::array<double, kMaxDim> radii{};  // polydisc half-widths per complex axis
  int points_per_axis = 0;              // per real axis (2n real axes)

  GridDomain() = default;
  GridDomain(int n_, std::array<complexd, kMaxDim> c, std::array<double, kMaxDim> r, int p)
      : n(n_), center(c), radii(r), points_per_axis(p) {
    if (n < 1 || n > kMaxDim) throw std::invalid_argument("GridDomain: n out of range");
    if (p < 4) throw std::invalid_argument("GridDomain: points_per_axis too small");
    for (int j = 0; j < n; ++j)
      if (!(radii[static_cast<std::size_t>(j)] > 0)) throw std::invalid_argument("GridDomain: radii must be positive");
  }

  static GridDomain square(int n, double radius, int p) {
    std::array<complexd, kMaxDim> c{};
    std::array<double, kMaxDim> r{};
    for (int j = 0; j < n; ++j) r[static_cast<std::size_t>(j)] = radius;
    return GridDomain(n, c, r, p);
  }

  int real_axes() const { return 2 * n; }

  std::size_t cell_count() const {
    std::size_t c = 1;
    for (int a = 0; a < real_axes(); ++a) c *= static_cast<std::size_t>(points_per_axis);
    return c;
  }

  // Lebesgue volume of one cell: prod_j (2 r_j / P)^2.
  double cell_volume() const {
    double v = 1.0;
    for (int j = 0; j < n; ++j) {
      double h = 2.0 * radii[static_cast<std::size_t>(j)] / points_per_axis;
      v *= h * h;
    }
    return v;
  }

  // Grid spacing along real axis a (axes 2j, 2j+1 share radius r_j).
  double step(int a) const { return 2.0 * radii[static_cast<std::size_t>(a / 2)] / points_per_axis; }

  // Row-major flattening, last axis fastest.
  std::size_t flatten(const std::array<int, 2 * kMaxDim>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < real_axes(); ++a) f = f * static_cast<std::size_t>(points_per_axis) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
    return f;
  }

  std::array<int, 2 * kMaxDim> unflatten(std::size_t cell) const {
    std::array<int, 2 * kMaxDim> idx{};
    for (int a = real_axes() - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(cell % static_cast<std::size_t>(points_per_axis));
      cell /= static_cast<std::size_t>(points_per_axis);
    }
    return idx;
  }

  double axis_coord(int a, int i) const {
    double c = (a % 2 == 0) ? center[static_cast<std::size_t>(a / 2)].real() : center[static_cast<std::size_t>(a / 2)].imag();
    return c - radii[static_cast<std::size_t>(a / 2)] + (i + 0.5) * step(a);
  }

  std::array<complexd, kMaxDim> point(std::size_t cell) const {
    auto idx = unflatten(cell);
    std::array<complexd, kMaxDim> z{};
    for (int j = 0; j < n; ++j)
      z[static_cast<std::size_t>(j)] = complexd(axis_coord(2 * j, idx[static_cast<std::size_t>(2 * j)]),
                                                axis_coord(2 * j + 1, idx[static_cast<std::size_t>(2 * j + 1)]));
    return z;
  }

  // Neighbor cell along a real axis; false if it leaves the grid.
  bool neighbor(std::size_t cell, int axis, int delta, std::size_t& out) const {
    auto idx = unflatten(cell);
    int v = idx[static_cast<std::size_t>(axis)] + delta;
    if (v < 0 || v >= points_per_axis) return false;
    idx[static_cast<std::size_t>(axis)] = v;
    out = flatten(idx);
    return true;
  }

  // True if the cell lies within `ring` cells of the grid boundary.
  bool in_boundary_ring(std::size_t cell, int ring) const {
    auto idx = unflatten(cell);
    for (int a = 0; a < real_axes(); ++a) {
      int i = idx[static_cast<std::size_t>(a)];
      if (i < ring || i >= points_per_axis - ring) return true;
    }
    return false;
  }

  bool same_layout(const GridDomain& o) const {
    if (n != o.n || points_per_axis != o.points_per_axis) return false;
    for (int j = 0; j < n; ++j) {
      if (center[static_cast<std::size_t>(j)] != o.center[static_cast<std::size_t>(j)]) return false;
      if (radii[static_cast<std::size_t>(j)] != o.radii[static_cast<std::size_t>(j)]) return false;
    }
    return true;
  }
};

struct ScalarField {
  GridDomain domain;
  std::vector<double> values;
  std::vector<std::uint8_t> finite;  // finite[c] == 0  <=>  values[c] == BOTTOM

  ScalarField() = default;
  explicit ScalarField(const GridDomain& d) : domain(d), values(d.cell_count(), 0.0), finite(d.cell_count(), 1) {}

  void set(std::size_t c, double v) {
    if (std::isinf(v) && v < 0) {
      values[c] = kBottom;
      finite[c] = 0;
    } else {
      values[c] = v;
      finite[c] = 1;
    }
  }

  template <class F>
  static ScalarField sample(const GridDomain& d, F&& f) {
    ScalarField s(d);
    const std::size_t m = d.cell_count();
    for (std::size_t c = 0; c < m; ++c) s.set(c, f(d.point(c)));
    return s;
  }
};

struct HermitianFormField {
  GridDomain domain;
  std::vector<HMat> matrices;
  std::vector<std::uint8_t> valid;

  HermitianFormField() = default;
  explicit HermitianFormField(const GridDomain& d)
      : domain(d), matrices(d.cell_count(), HMat(d.n)), valid(d.cell_count(), 1) {}

  static HermitianFormField constant(const GridDomain& d, const HMat& m) {
    HermitianFormField f(d);
    for (auto& x : f.matrices) x = m;
    return f;
  }

  // omega_std = dd^c |z|^2: the identity matrix field.
  static HermitianFormField omega_std(const GridDomain& d) { return constant(d, HMat::identity(d.n)); }

  double max_hermitian_defect() const {
    double m = 0.0;
    for (std::size_t c = 0; c < matrices.size(); ++c)
      if (valid[c]) m = std::max(m, matrices[c].hermitian_defect());
    return m;
  }
};

// ---------------------------------------------------------------------------
// Regions and fractional masks.
//
// Region masks carry per-cell coverage fractions in [0,1]. Polydisc regions
// use the exact disc/rectangle overlap per complex plane; balls in n >= 2 use
// subsampling on boundary cells. Boolean plurifine masks {u > -l} are plain
// 0/1 weights on top of these.

namespace detail {
// Area of [0,x] x [0,y] (signed in x,y) intersected with the disc of radius R
// centered at the origin.
inline double quadrant_disc_area(double x, double y, double R) {
  double sx = x < 0 ? -1.0 : 1.0, sy = y < 0 ? -1.0 : 1.0;
  double a = std::abs(x), b = std::abs(y);
  if (a == 0 || b == 0) return 0.0;
  a = std::min(a, R);
  double area;
  if (a * a + b * b <= R * R) {
    area = a * b;
  } else {
    double xs = std::sqrt(std::max(R * R - b * b, 0.0));
    auto G = [R](double t) { return 0.5 * (t * std::sqrt(std::max(R * R - t * t, 0.0)) + R * R * std::asin(std::min(1.0, t / R))); };
    area = b * xs + (G(a) - G(xs));
  }
  return sx * sy * area;
}

// Exact overlap area of rectangle [x0,x1]x[y0,y1] with the disc of radius R
// centered at (cx, cy).
inline double disc_rect_overlap(double x0, double x1, double y0, double y1, double cx, double cy, double R) {
  x0 -= cx; x1 -= cx; y0 -= cy; y1 -= cy;
  return quadrant_disc_area(x1, y1, R) - quadrant_disc_area(x0, y1, R) - quadrant_disc_area(x1, y0, R) +
         quadrant_disc_area(x0, y0, R);
}
}  // namespace detail

struct Region {
  enum class Kind { Full, Polydisc, Ball } kind = Kind::Full;
  std::array<complexd, kMaxDim> center{};
  std::array<double, kMaxDim> radii{};  // Polydisc: per-axis; Ball: radii[0]

  static Region full() { return Region{}; }
  static Region polydisc(std::array<complexd, kMaxDim> c, std::array<double, kMaxDim> r) {
    Region g; g.kind = Kind::Polydisc; g.center = c; g.radii = r; return g;
  }
  static Region ball(std::array<complexd, kMaxDim> c, double r) {
    Region g; g.kind = Kind::Ball; g.center = c; g.radii = {r, 0, 0}; return g;
  }

  // Fractional cell coverage on a grid.
  std::vector<double> weights(const GridDomain& d) const {
    const std::size_t m = d.cell_count();
    std::vector<double> w(m, 1.0);
    if (kind == Kind::Full) return w;
    if (kind == Kind::Polydisc) {
      for (std::size_t c = 0; c < m; ++c) {
        auto idx = d.unflatten(c);
        double frac = 1.0;
        for (int j = 0; j < d.n && frac > 0; ++j) {
          double hx = d.step(2 * j), hy = d.step(2 * j + 1);
          double x = d.axis_coord(2 * j, idx[static_cast<std::size_t>(2 * j)]);
          double y = d.axis_coord(2 * j + 1, idx[static_cast<std::size_t>(2 * j + 1)]);
          double a = detail::disc_rect_overlap(x - hx / 2, x + hx / 2, y - hy / 2, y + hy / 2,
                                               center[static_cast<std::size_t>(j)].real(),
                                               center[static_cast<std::size_t>(j)].imag(),
                                               radii[static_cast<std::size_t>(j)]);
          frac *= a / (hx * hy);
        }
        w[c] = std::max(0.0, std::min(1.0, frac));
      }
      return w;
    }
    // Ball: exact in C^1 (disc); subsampled boundary cells in higher n.
    if (d.n == 1) {
      Region pd = polydisc(center, {radii[0], 0, 0});
      return pd.weights(d);
    }
    const double R = radii[0];
    const int sub = 4;
    for (std::size_t c = 0; c < m; ++c) {
      auto z = d.point(c);
      double r2 = 0.0, half_diag = 0.0;
      for (int j = 0; j < d.n; ++j) {
        complexd dz = z[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)];
        r2 += std::norm(dz);
        half_diag += 0.5 * (d.step(2 * j) + d.step(2 * j + 1));
      }
      double r = std::sqrt(r2);
      if (r + half_diag <= R) { w[c] = 1.0; continue; }
      if (r - half_diag >= R) { w[c] = 0.0; continue; }
      // Boundary cell: subsample.
      auto idx = d.unflatten(c);
      int inside = 0, total = 0;
      std::array<int, 2 * kMaxDim> sidx{};
      int axes = d.real_axes();
      std::vector<double> base(static_cast<std::size_t>(axes)), h(static_cast<std::size_t>(axes));
      for (int a = 0; a < axes; ++a) {
        h[static_cast<std::size_t>(a)] = d.step(a);
        base[static_cast<std::size_t>(a)] = d.axis_coord(a, idx[static_cast<std::size_t>(a)]) - h[static_cast<std::size_t>(a)] / 2;
      }
      // Odometer over sub^axes subcells.
      std::fill(sidx.begin(), sidx.end(), 0);
      while (true) {
        double rr = 0.0;
        for (int j = 0; j < d.n; ++j) {
          double px = base[static_cast<std::size_t>(2 * j)] + (sidx[static_cast<std::size_t>(2 * j)] + 0.5) * h[static_cast<std::size_t>(2 * j)] / sub;
          double py = base[static_cast<std::size_t>(2 * j + 1)] + (sidx[static_cast<std::size_t>(2 * j + 1)] + 0.5) * h[static_cast<std::size_t>(2 * j + 1)] / sub;
          complexd dz = complexd(px, py) - center[static_cast<std::size_t>(j)];
          rr += std::norm(dz);
        }
        ++total;
        if (rr <= R * R) ++inside;
        int a = axes - 1;
        while (a >= 0 && ++sidx[static_cast<std::size_t>(a)] == sub) { sidx[static_cast<std::size_t>(a)] = 0; --a; }
        if (a < 0) break;
      }
      w[c] = static_cast<double>(inside) / total;
    }
    return w;
  }

  // True if the closed region (plus a margin) stays inside the grid minus the
  // boundary ring.
  bool strictly_inside(const GridDomain& d, int ring) const {
    if (kind == Kind::Full) return ring == 0;
    double margin = 0.0;
    for (int a = 0; a < d.real_axes(); ++a) margin = std::max(margin, (ring + 1) * d.step(a));
    for (int j = 0; j < d.n; ++j) {
      std::size_t ju = static_cast<std::size_t>(j);
      double r = (kind == Kind::Ball) ? radii[0] : radii[ju];
      double cx = center[ju].real(), cy = center[ju].imag();
      double gx = d.center[ju].real(), gy = d.center[ju].imag();
      if (cx - r < gx - d.radii[ju] + margin || cx + r > gx + d.radii[ju] - margin) return false;
      if (cy - r < gy - d.radii[ju] + margin || cy + r > gy + d.radii[ju] - margin) return false;
    }
    return true;
  }
};

}  // namespace nppl
