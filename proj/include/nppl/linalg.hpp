#pragma once

// Small fixed-capacity Hermitian matrix algebra for complex dimensions n <= 3,
// plus the mixed discriminant via determinant polarization. These are the
// pointwise kernels behind every wedge-product density in the lab.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>

namespace nppl {

using complexd = std::complex<double>;

inline constexpr int kMaxDim = 3;
inline constexpr double kPi = 3.14159265358979323846;

// Dense complex matrix with runtime dimension n in [1,3].
struct HMat {
  int n = 0;
  std::array<complexd, kMaxDim * kMaxDim> a{};

  HMat() = default;
  explicit HMat(int dim) : n(dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("HMat: dim out of range");
  }

  complexd& at(int j, int k) { return a[static_cast<std::size_t>(j * kMaxDim + k)]; }
  const complexd& at(int j, int k) const { return a[static_cast<std::size_t>(j * kMaxDim + k)]; }

  static HMat zero(int dim) { return HMat(dim); }

  static HMat identity(int dim) {
    HMat m(dim);
    for (int j = 0; j < dim; ++j) m.at(j, j) = 1.0;
    return m;
  }

  static HMat diag(int dim, std::array<double, kMaxDim> d) {
    HMat m(dim);
    for (int j = 0; j < dim; ++j) m.at(j, j) = d[static_cast<std::size_t>(j)];
    return m;
  }

  HMat& operator+=(const HMat& o) {
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) at(j, k) += o.at(j, k);
    return *this;
  }

  HMat& operator*=(double s) {
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) at(j, k) *= s;
    return *this;
  }

  friend HMat operator+(HMat x, const HMat& y) { return x += y; }
  friend HMat operator*(double s, HMat x) { return x *= s; }

  // Max relative deviation from A = A^*.
  double hermitian_defect() const {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        num = std::max(num, std::abs(at(j, k) - std::conj(at(k, j))));
        den = std::max(den, std::abs(at(j, k)));
      }
    return den > 0 ? num / den : num;
  }

  void symmetrize() {
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        complexd m = 0.5 * (at(j, k) + std::conj(at(k, j)));
        at(j, k) = m;
        at(k, j) = std::conj(m);
      }
  }
};

inline complexd det(const HMat& m) {
  switch (m.n) {
    case 1:
      return m.at(0, 0);
    case 2:
      return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
    case 3:
      return m.at(0, 0) * (m.at(1, 1) * m.at(2, 2) - m.at(1, 2) * m.at(2, 1)) -
             m.at(0, 1) * (m.at(1, 0) * m.at(2, 2) - m.at(1, 2) * m.at(2, 0)) +
             m.at(0, 2) * (m.at(1, 0) * m.at(2, 1) - m.at(1, 1) * m.at(2, 0));
    default:
      throw std::logic_error("det: unsupported dimension");
  }
}

// Mixed discriminant by determinant polarization:
//   MD(M_1,...,M_n) = (1/n!) sum_{S != 0} (-1)^{n-|S|} det(sum_{i in S} M_i).
// Symmetric and multilinear; MD(A,...,A) = det A.
inline complexd mixed_discriminant(const HMat* mats, int n) {
  for (int i = 0; i < n; ++i)
    if (mats[i].n != n) throw std::invalid_argument("mixed_discriminant: dim mismatch");
  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  complexd acc = 0.0;
  const int full = (1 << n);
  for (int s = 1; s < full; ++s) {
    HMat sum(n);
    int card = 0;
    for (int i = 0; i < n; ++i)
      if (s & (1 << i)) {
        sum += mats[i];
        ++card;
      }
    double sign = ((n - card) % 2 == 0) ? 1.0 : -1.0;
    acc += sign * det(sum);
  }
  return acc / fact;
}

inline complexd mixed_discriminant(const std::array<HMat, kMaxDim>& mats, int n) {
  return mixed_discriminant(mats.data(), n);
}

// Real part with a guard: wedge densities of Hermitian inputs are real;
// anything beyond roundoff in the imaginary part indicates a bad input.
inline double real_checked(complexd v, double tol, const char* what) {
  double scale = std::max(1.0, std::abs(v));
  if (std::abs(v.imag()) > tol * scale) throw std::runtime_error(std::string(what) + ": non-real value");
  return v.real();
}

}  // namespace nppl
