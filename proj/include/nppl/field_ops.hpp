#pragma once

// Field-level operations: finite-difference complex Hessians, wedge/mixed
// densities via the mixed discriminant, masked integration with the
// deterministic reduction tree, and the flat binary field layout.

#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nppl/grid.hpp"
#include "nppl/sum.hpp"

namespace nppl {

// ---------------------------------------------------------------------------
// complex_hessian: A_jk = d^2 u / dz_j dzbar_k by 2nd-order centered stencils,
//   A_jk = (1/4) [ (d_xj d_xk + d_yj d_yk) u + i (d_xj d_yk - d_yj d_xk) u ].
// Cells whose stencil touches BOTTOM or the grid edge are marked invalid, not
// silently zeroed.

namespace detail {
struct StencilReader {
  const ScalarField& u;
  bool ok = true;
  double get(std::size_t c) {
    if (!u.finite[c]) { ok = false; return 0.0; }
    return u.values[c];
  }
  double shifted(std::size_t cell, int a1, int d1, int a2, int d2) {
    std::size_t c = cell;
    if (d1 != 0 && !u.domain.neighbor(c, a1, d1, c)) { ok = false; return 0.0; }
    if (d2 != 0 && !u.domain.neighbor(c, a2, d2, c)) { ok = false; return 0.0; }
    return get(c);
  }
};
}  // namespace detail

inline HermitianFormField complex_hessian(const ScalarField& u) {
  const GridDomain& d = u.domain;
  HermitianFormField H(d);
  const std::size_t m = d.cell_count();
  for (std::size_t c = 0; c < m; ++c) {
    detail::StencilReader rd{u};
    if (!u.finite[c]) { H.valid[c] = 0; continue; }
    const double uc = u.values[c];
    HMat A(d.n);
    for (int j = 0; j < d.n && rd.ok; ++j) {
      for (int k = j; k < d.n && rd.ok; ++k) {
        int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
        double hxj = d.step(xj), hyj = d.step(yj), hxk = d.step(xk), hyk = d.step(yk);
        if (j == k) {
          double uxx = (rd.shifted(c, xj, 1, 0, 0) - 2 * uc + rd.shifted(c, xj, -1, 0, 0)) / (hxj * hxj);
          double uyy = (rd.shifted(c, yj, 1, 0, 0) - 2 * uc + rd.shifted(c, yj, -1, 0, 0)) / (hyj * hyj);
          A.at(j, j) = 0.25 * (uxx + uyy);
        } else {
          auto cross = [&](int a, int b, double ha, double hb) {
            return (rd.shifted(c, a, 1, b, 1) - rd.shifted(c, a, 1, b, -1) - rd.shifted(c, a, -1, b, 1) +
                    rd.shifted(c, a, -1, b, -1)) /
                   (4 * ha * hb);
          };
          double xx = cross(xj, xk, hxj, hxk);
          double yy = cross(yj, yk, hyj, hyk);
          double xy = cross(xj, yk, hxj, hyk);
          double yx = cross(yj, xk, hyj, hxk);
          A.at(j, k) = 0.25 * complexd(xx + yy, xy - yx);
          A.at(k, j) = std::conj(A.at(j, k));
        }
      }
    }
    if (!rd.ok) { H.valid[c] = 0; continue; }
    A.symmetrize();
    H.matrices[c] = A;
  }
  return H;
}

// ---------------------------------------------------------------------------
// Wedge densities. For (1,1)-forms a_i = (i/2pi) sum A_jk dz_j dzbar_k,
//   a_1 ^ ... ^ a_n = n! MD(A_1,...,A_n) prod_j (i/2pi) dz_j dzbar_j,
// and prod_j (i/2pi) dz_j dzbar_j is Lebesgue measure / pi^n. Densities are
// reported against Lebesgue measure.

inline double wedge_density_factor(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  for (int i = 0; i < n; ++i) f /= kPi;
  return f;  // n! / pi^n
}

struct WedgeEntry {
  const HermitianFormField* field = nullptr;  // either a field...
  std::optional<HMat> constant;               // ...or a constant matrix

  WedgeEntry(const HermitianFormField& f) : field(&f) {}
  WedgeEntry(const HMat& m) : constant(m) {}
};

// Density of a_1 ^ ... ^ a_n (exactly n entries). Cells where any field entry
// is invalid become BOTTOM.
inline ScalarField wedge_density(const GridDomain& d, const std::vector<WedgeEntry>& entries,
                                 double hermitian_tol = 1e-12) {
  if (static_cast<int>(entries.size()) != d.n)
    throw std::invalid_argument("wedge_density: need exactly n factors");
  for (const auto& e : entries) {
    if (e.field && !e.field->domain.same_layout(d)) throw std::invalid_argument("wedge_density: domain mismatch");
    if (e.constant && e.constant->n != d.n) throw std::invalid_argument("wedge_density: constant dim mismatch");
    if (e.constant && e.constant->hermitian_defect() > hermitian_tol)
      throw std::invalid_argument("wedge_density: non-Hermitian constant factor");
    if (e.field && e.field->max_hermitian_defect() > hermitian_tol)
      throw std::invalid_argument("wedge_density: non-Hermitian field factor");
  }
  const double factor = wedge_density_factor(d.n);
  ScalarField out(d);
  const std::size_t m = d.cell_count();
  std::array<HMat, kMaxDim> mats;
  for (std::size_t c = 0; c < m; ++c) {
    bool ok = true;
    for (int i = 0; i < d.n; ++i) {
      const auto& e = entries[static_cast<std::size_t>(i)];
      if (e.field) {
        if (!e.field->valid[c]) { ok = false; break; }
        mats[static_cast<std::size_t>(i)] = e.field->matrices[c];
      } else {
        mats[static_cast<std::size_t>(i)] = *e.constant;
      }
    }
    if (!ok) {
      out.values[c] = kBottom;
      out.finite[c] = 0;
      continue;
    }
    complexd md = mixed_discriminant(mats, d.n);
    out.values[c] = factor * real_checked(md, 1e-9, "wedge_density");
  }
  return out;
}

// mixed_density: density of a_1 ^ ... ^ a_p ^ b^(n-p).
inline ScalarField mixed_density(const std::vector<const HermitianFormField*>& forms,
                                 const HermitianFormField& background, int p) {
  const GridDomain& d = background.domain;
  if (static_cast<int>(forms.size()) != p) throw std::invalid_argument("mixed_density: need p forms");
  if (p < 0 || p > d.n) throw std::invalid_argument("mixed_density: p out of range");
  std::vector<WedgeEntry> entries;
  for (auto* f : forms) entries.emplace_back(*f);
  for (int i = p; i < d.n; ++i) entries.emplace_back(background);
  return wedge_density(d, entries);
}

// ---------------------------------------------------------------------------
// masked_integral: sum over cells of weight * density * fraction * cellvol
// through the fixed pairwise tree. Fractions in [0,1]; BOTTOM on a masked-in
// cell (density or weight) is an error. Without a mask, any BOTTOM at all is
// an error.

inline double masked_integral(const ScalarField& density, std::span<const double> mask_fractions,
                              const ScalarField* weight = nullptr) {
  const GridDomain& d = density.domain;
  const std::size_t m = d.cell_count();
  if (!mask_fractions.empty() && mask_fractions.size() != m)
    throw std::invalid_argument("masked_integral: mask size mismatch");
  if (weight && !weight->domain.same_layout(d)) throw std::invalid_argument("masked_integral: weight domain mismatch");
  const double vol = d.cell_volume();
  std::vector<double> terms(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    double frac = mask_fractions.empty() ? 1.0 : mask_fractions[c];
    if (frac <= 0.0) continue;
    if (!density.finite[c])
      throw std::runtime_error(mask_fractions.empty() ? "masked_integral: BOTTOM density without mask"
                                                      : "masked_integral: BOTTOM density on masked-in cell");
    double t = density.values[c] * frac * vol;
    if (weight) {
      if (!weight->finite[c]) throw std::runtime_error("masked_integral: BOTTOM weight on masked-in cell");
      t *= weight->values[c];
    }
    terms[c] = t;
  }
  return pairwise_sum(terms);
}

inline double masked_integral(const ScalarField& density, const std::vector<double>& mask,
                              const ScalarField* weight = nullptr) {
  return masked_integral(density, std::span<const double>(mask), weight);
}

inline double integral(const ScalarField& density) {
  return masked_integral(density, std::span<const double>{}, nullptr);
}

// Boolean sublevel mask {u > -l} as 0/1 fractions, optionally intersected
// with region fractions.
inline std::vector<double> sublevel_mask(const ScalarField& u, double ell,
                                         const std::vector<double>* region = nullptr) {
  const std::size_t m = u.domain.cell_count();
  std::vector<double> w(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    bool in = u.finite[c] && u.values[c] > -ell;
    double f = in ? 1.0 : 0.0;
    if (region) f *= (*region)[c];
    w[c] = f;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Flat binary serialization: JSON header line (n, center, radii,
// points_per_axis), '\n', then little-endian float64 values row-major.

void save_field(const ScalarField& f, const std::string& path);
ScalarField load_field(const std::string& path);

}  // namespace nppl
