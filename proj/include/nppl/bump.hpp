#pragma once

// Compactly supported C^4 bump profiles with closed-form derivatives, and the
// TestForm family: xi = chi * omega_std^{n-p} or chi times a wedge of
// constant Hermitian forms. dd^c(xi) is available analytically, never by
// finite differencing. The degree-9 smoothstep keeps composite-midpoint
// quadrature of dd^c chi far below the Stokes tolerance.

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nppl/grid.hpp"
#include "nppl/jet.hpp"

namespace nppl {

// s(0)=1, s(1)=0 with four vanishing derivatives at both ends.
struct SmoothStep9 {
  static double value(double x) {
    if (x <= 0) return 1.0;
    if (x >= 1) return 0.0;
    double x5 = x * x * x * x * x;
    return 1.0 - x5 * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x))));
  }
  static double d1(double x) {
    if (x <= 0 || x >= 1) return 0.0;
    double x4 = x * x * x * x;
    return -(630.0 * x4 + -2520.0 * x4 * x + 3780.0 * x4 * x * x + -2520.0 * x4 * x * x * x + 630.0 * x4 * x * x * x * x);
  }
  static double d2(double x) {
    if (x <= 0 || x >= 1) return 0.0;
    double x3 = x * x * x;
    return -(2520.0 * x3 - 12600.0 * x3 * x + 22680.0 * x3 * x * x - 17640.0 * x3 * x * x * x + 5040.0 * x3 * x * x * x * x);
  }
};

// Radial plateau profile in t = |.|^2: q(t) = 1 on [0, a^2], 0 on [b^2, inf).
struct BumpProfile {
  double a2 = 0.0, b2 = 1.0;  // plateau^2, support^2

  BumpProfile() = default;
  BumpProfile(double plateau, double support) : a2(plateau * plateau), b2(support * support) {
    if (!(support > plateau) || !(plateau >= 0)) throw std::invalid_argument("BumpProfile: need 0 <= plateau < support");
  }

  double q(double t) const { return SmoothStep9::value((t - a2) / (b2 - a2)); }
  double dq(double t) const { return SmoothStep9::d1((t - a2) / (b2 - a2)) / (b2 - a2); }
  double ddq(double t) const { return SmoothStep9::d2((t - a2) / (b2 - a2)) / ((b2 - a2) * (b2 - a2)); }
};

struct TestForm {
  enum class Shape { Tensor, Ball };
  enum class PowerPart { OmegaStd, ConstWedge };

  int n = 1;                     // complex dimension of the ambient grid
  int degree = 1;                // pairs against (p,p)-currents with p = degree
  Shape shape = Shape::Tensor;
  std::array<complexd, kMaxDim> center{};
  std::array<BumpProfile, kMaxDim> profiles{};  // Tensor: per axis; Ball: profiles[0]
  PowerPart power = PowerPart::OmegaStd;
  std::vector<HMat> const_forms;  // ConstWedge: exactly n - degree matrices

  static TestForm tensor_bump(int n, int degree, std::array<complexd, kMaxDim> center, double plateau,
                              double support) {
    TestForm t;
    t.n = n;
    t.degree = degree;
    t.shape = Shape::Tensor;
    t.center = center;
    for (int j = 0; j < n; ++j) t.profiles[static_cast<std::size_t>(j)] = BumpProfile(plateau, support);
    return t;
  }

  static TestForm ball_bump(int n, int degree, std::array<complexd, kMaxDim> center, double plateau,
                            double support) {
    TestForm t = tensor_bump(n, degree, center, plateau, support);
    t.shape = Shape::Ball;
    return t;
  }

  TestForm with_const_wedge(std::vector<HMat> forms) const {
    TestForm t = *this;
    t.power = PowerPart::ConstWedge;
    t.const_forms = std::move(forms);
    if (static_cast<int>(t.const_forms.size()) != n - degree)
      throw std::invalid_argument("TestForm: const wedge needs n - p factors");
    return t;
  }

  // Number of wedge slots contributed by the power part.
  int power_slots() const { return n - degree; }

  double chi(const std::array<complexd, kMaxDim>& z) const {
    if (shape == Shape::Ball) {
      double t = 0.0;
      for (int j = 0; j < n; ++j) t += std::norm(z[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)]);
      return profiles[0].q(t);
    }
    double v = 1.0;
    for (int j = 0; j < n; ++j)
      v *= profiles[static_cast<std::size_t>(j)].q(std::norm(z[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)]));
    return v;
  }

  // Full 2-jet of chi (closed-form derivatives of the profile family).
  Jet2 chi_jet(const std::array<complexd, kMaxDim>& z) const {
    Jet2 r = Jet2::constant(n, 0.0);
    if (shape == Shape::Ball) {
      double t = 0.0;
      CVec w{};  // w_j = conj(z_j - c_j), so dt/dz_j = w_j
      for (int j = 0; j < n; ++j) {
        complexd dz = z[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)];
        t += std::norm(dz);
        w[static_cast<std::size_t>(j)] = std::conj(dz);
      }
      const auto& p = profiles[0];
      r.v = p.q(t);
      double d1 = p.dq(t), d2 = p.ddq(t);
      for (int j = 0; j < n; ++j) r.g[static_cast<std::size_t>(j)] = d1 * w[static_cast<std::size_t>(j)];
      r.h = HMat(n);
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k)
          r.h.at(j, k) = d2 * w[static_cast<std::size_t>(j)] * std::conj(w[static_cast<std::size_t>(k)]);
        r.h.at(j, j) += d1;
      }
      return r;
    }
    // Tensor product of per-axis radial factors.
    std::array<double, kMaxDim> q{}, dq{}, ddq{};
    CVec w{};
    for (int j = 0; j < n; ++j) {
      complexd dz = z[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)];
      double t = std::norm(dz);
      const auto& p = profiles[static_cast<std::size_t>(j)];
      q[static_cast<std::size_t>(j)] = p.q(t);
      dq[static_cast<std::size_t>(j)] = p.dq(t);
      ddq[static_cast<std::size_t>(j)] = p.ddq(t);
      w[static_cast<std::size_t>(j)] = std::conj(dz);
    }
    auto prod_except = [&](int skip1, int skip2) {
      double v = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != skip1 && j != skip2) v *= q[static_cast<std::size_t>(j)];
      return v;
    };
    r.v = prod_except(-1, -1);
    r.h = HMat(n);
    for (int j = 0; j < n; ++j) {
      double t = std::norm(z[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)]);
      r.g[static_cast<std::size_t>(j)] = dq[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j)] * prod_except(j, -1);
      r.h.at(j, j) = (ddq[static_cast<std::size_t>(j)] * t + dq[static_cast<std::size_t>(j)]) * prod_except(j, -1);
      for (int k = 0; k < n; ++k) {
        if (k == j) continue;
        r.h.at(j, k) = dq[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j)] * dq[static_cast<std::size_t>(k)] *
                       std::conj(w[static_cast<std::size_t>(k)]) * prod_except(j, k);
      }
    }
    return r;
  }

  double support_radius() const {
    double r = 0.0;
    for (int j = 0; j < (shape == Shape::Ball ? 1 : n); ++j) r = std::max(r, std::sqrt(profiles[static_cast<std::size_t>(j)].b2));
    return r;
  }

  // Compact support strictly inside the domain (outside the boundary ring).
  bool supported_inside(const GridDomain& d, int ring = 1) const {
    double rs = support_radius();
    if (shape == Shape::Ball) {
      return Region::ball(center, rs).strictly_inside(d, ring);
    }
    std::array<double, kMaxDim> rr{};
    for (int j = 0; j < n; ++j) rr[static_cast<std::size_t>(j)] = std::sqrt(profiles[static_cast<std::size_t>(j)].b2);
    return Region::polydisc(center, rr).strictly_inside(d, ring);
  }
};

// dd^c xi sampled analytically: the Hessian field of chi plus the n - p
// constant wedge factors (omega_std copies or the user-provided constants).
struct TestFormDdc {
  HermitianFormField ddc_chi;  // H(chi), exact from the profile derivatives
  std::vector<HMat> power;     // the n - p power-part matrices
};

TestFormDdc test_form_ddc(const TestForm& xi, const GridDomain& d);

// The power-part matrices of xi (identity for omega_std copies).
inline std::vector<HMat> power_matrices(const TestForm& xi) {
  if (xi.power == TestForm::PowerPart::ConstWedge) return xi.const_forms;
  return std::vector<HMat>(static_cast<std::size_t>(xi.power_slots()), HMat::identity(xi.n));
}

}  // namespace nppl
