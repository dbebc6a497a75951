#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "nppl/bump.hpp"
#include "nppl/field_ops.hpp"

using namespace nppl;

namespace {

double max_interior_entry_error(const HermitianFormField& H, const HMat& expected, int ring = 1) {
  double worst = 0.0;
  const GridDomain& d = H.domain;
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    if (d.in_boundary_ring(c, ring)) continue;
    REQUIRE(H.valid[c]);
    for (int j = 0; j < d.n; ++j)
      for (int k = 0; k < d.n; ++k) worst = std::max(worst, std::abs(H.matrices[c].at(j, k) - expected.at(j, k)));
  }
  return worst;
}

}  // namespace

TEST_CASE("dd^c |z|^2 = omega_std: identity matrix at every interior cell") {
  for (int n = 1; n <= 2; ++n) {
    GridDomain d = GridDomain::square(n, 1.0, n == 1 ? 64 : 16);
    ScalarField u = ScalarField::sample(d, [n](const std::array<complexd, kMaxDim>& z) {
      double s = 0;
      for (int j = 0; j < n; ++j) s += std::norm(z[static_cast<std::size_t>(j)]);
      return s;
    });
    HermitianFormField H = complex_hessian(u);
    CHECK(max_interior_entry_error(H, HMat::identity(n)) < 1e-10);  // FD exact on quadratics
  }
}

TEST_CASE("pluriharmonic Re(z1^2) has zero complex Hessian") {
  GridDomain d = GridDomain::square(2, 1.0, 12);
  ScalarField u = ScalarField::sample(d, [](const std::array<complexd, kMaxDim>& z) {
    return (z[0] * z[0]).real();
  });
  HermitianFormField H = complex_hessian(u);
  CHECK(max_interior_entry_error(H, HMat::zero(2)) < 1e-10);
}

TEST_CASE("log(|z|^2 + eps) in C^1 matches the symbolic second derivative") {
  // d^2/dz dzbar log(|z|^2 + eps) = eps / (|z|^2 + eps)^2; at 0 this is 1/eps.
  double eps = 0.3;
  GridDomain d = GridDomain::square(1, 1.0, 256);
  ScalarField u = ScalarField::sample(d, [eps](const std::array<complexd, kMaxDim>& z) {
    return std::log(std::norm(z[0]) + eps);
  });
  HermitianFormField H = complex_hessian(u);
  double worst = 0.0;
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    if (d.in_boundary_ring(c, 1)) continue;
    auto z = d.point(c);
    double exact = eps / std::pow(std::norm(z[0]) + eps, 2);
    worst = std::max(worst, std::abs(H.matrices[c].at(0, 0).real() - exact));
  }
  CHECK(worst < 2e-3);
  // near-origin cell value approaches 1/eps
  auto idx = d.unflatten(0);
  for (int a = 0; a < 2; ++a) idx[static_cast<std::size_t>(a)] = d.points_per_axis / 2;
  std::size_t c0 = d.flatten(idx);
  CHECK(H.matrices[c0].at(0, 0).real() == doctest::Approx(1.0 / eps).epsilon(1e-3));
}

TEST_CASE("pluriharmonic samples vanish at observed order >= 1.8 under refinement") {
  auto worst_for = [](int P) {
    GridDomain d = GridDomain::square(2, 1.0, P);
    ScalarField u = ScalarField::sample(d, [](const std::array<complexd, kMaxDim>& z) {
      complexd w = z[0] * z[0] * z[0] * z[0] * z[0] + z[0] * z[0] * z[1] * z[1] * z[1];
      return w.real();
    });
    HermitianFormField H = complex_hessian(u);
    double worst = 0.0;
    for (std::size_t c = 0; c < d.cell_count(); ++c) {
      if (d.in_boundary_ring(c, 1)) continue;
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) worst = std::max(worst, std::abs(H.matrices[c].at(j, k)));
    }
    return worst;
  };
  double e1 = worst_for(16), e2 = worst_for(32);
  double order = std::log2(e1 / e2);
  CHECK(order >= 1.8);
}

TEST_CASE("stencils touching BOTTOM mark cells invalid, not zero") {
  GridDomain d = GridDomain::square(1, 1.0, 16);
  ScalarField u = ScalarField::sample(d, [](const std::array<complexd, kMaxDim>& z) {
    return std::abs(z[0] - complexd(0.4, 0.4)) < 0.15 ? kBottom : std::norm(z[0]);
  });
  HermitianFormField H = complex_hessian(u);
  bool any_invalid = false;
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    if (!u.finite[c]) {
      CHECK(!H.valid[c]);
      any_invalid = true;
    }
  }
  CHECK(any_invalid);
  // far from the hole the Hessian is still the identity
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    auto z = d.point(c);
    if (d.in_boundary_ring(c, 1) || std::abs(z[0] - complexd(0.4, 0.4)) < 0.5) continue;
    REQUIRE(H.valid[c]);
    CHECK(std::abs(H.matrices[c].at(0, 0) - complexd(1.0)) < 1e-10);
  }
}

TEST_CASE("calibration: omega_std^n over the polydisc = n! prod r_j^2") {
  {  // C^1 at 1024 points: 0.5%
    GridDomain d = GridDomain::square(1, 1.0, 1024);
    HermitianFormField w = HermitianFormField::omega_std(d);
    ScalarField den = mixed_density({&w}, w, 1);
    Region disc = Region::polydisc({complexd(0, 0)}, {1.0, 0, 0});
    double mass = masked_integral(den, disc.weights(d));
    CHECK(std::abs(mass - 1.0) < 0.005);
  }
  {  // C^2 at 32 points/real axis: 2%
    GridDomain d = GridDomain::square(2, 1.0, 32);
    HermitianFormField w = HermitianFormField::omega_std(d);
    ScalarField den = mixed_density({&w, &w}, w, 2);
    Region bidisc = Region::polydisc({complexd(0, 0), complexd(0, 0)}, {1.0, 1.0, 0});
    double mass = masked_integral(den, bidisc.weights(d));
    CHECK(std::abs(mass - 2.0) / 2.0 < 0.02);
  }
}

TEST_CASE("omega_std^2 over a bidisc with unequal radii") {
  GridDomain d(2, {complexd(0, 0), complexd(0, 0)}, {1.0, 0.6}, 32);
  HermitianFormField w = HermitianFormField::omega_std(d);
  ScalarField den = mixed_density({&w, &w}, w, 2);
  Region bidisc = Region::polydisc({complexd(0, 0), complexd(0, 0)}, {1.0, 0.6, 0});
  double mass = masked_integral(den, bidisc.weights(d));
  CHECK(mass == doctest::Approx(2.0 * 1.0 * 0.36).epsilon(0.02));
}

TEST_CASE("mixed density p = 1 against the direct wedge expansion in C^2") {
  // alpha = (i/2pi) a dz1 dzbar1, beta = omega_std:
  // alpha ^ beta = a * Lebesgue / pi^2.
  GridDomain d = GridDomain::square(2, 1.0, 8);
  double a = 1.7;
  HMat A(2);
  A.at(0, 0) = a;
  HermitianFormField alpha = HermitianFormField::constant(d, A);
  HermitianFormField w = HermitianFormField::omega_std(d);
  ScalarField den = mixed_density({&alpha}, w, 1);
  for (std::size_t c = 0; c < d.cell_count(); ++c)
    CHECK(den.values[c] == doctest::Approx(a / (kPi * kPi)).epsilon(1e-12));
}

TEST_CASE("mixed density rejects non-Hermitian input") {
  GridDomain d = GridDomain::square(2, 1.0, 8);
  HMat bad(2);
  bad.at(0, 1) = complexd(1.0, 0.0);
  bad.at(1, 0) = complexd(0.5, 0.0);
  HermitianFormField f = HermitianFormField::constant(d, bad);
  HermitianFormField w = HermitianFormField::omega_std(d);
  CHECK_THROWS(mixed_density({&f}, w, 1));
}

TEST_CASE("test form dd^c: plateau kills dd^c chi; Stokes mass vanishes") {
  GridDomain d = GridDomain::square(1, 1.0, 512);
  TestForm xi = TestForm::tensor_bump(1, 1, {complexd(0, 0)}, 0.3, 0.8);
  TestFormDdc ddc = test_form_ddc(xi, d);
  // flat plateau: dd^c chi = 0 strictly inside the plateau radius
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    auto z = d.point(c);
    if (std::abs(z[0]) < 0.25) CHECK(std::abs(ddc.ddc_chi.matrices[c].at(0, 0)) == 0.0);
  }
  // Stokes: total mass of dd^c xi over the whole domain vanishes
  ScalarField den = wedge_density(d, {WedgeEntry(ddc.ddc_chi)});
  CHECK(std::abs(integral(den)) < 1e-8);
}

TEST_CASE("radial bump dd^c matches the symbolic Laplacian of its profile") {
  // chi(z) = q(|z|^2): d^2 chi/dz dzbar = q''(t) t + q'(t), t = |z|^2.
  GridDomain d = GridDomain::square(1, 1.0, 64);
  TestForm xi = TestForm::ball_bump(1, 1, {complexd(0, 0)}, 0.3, 0.8);
  BumpProfile prof(0.3, 0.8);
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    auto z = d.point(c);
    double t = std::norm(z[0]);
    double exact = prof.ddq(t) * t + prof.dq(t);
    Jet2 j = xi.chi_jet(z);
    CHECK(std::abs(j.h.at(0, 0).real() - exact) < 1e-12);
  }
}

TEST_CASE("test form degree/support validation") {
  GridDomain d = GridDomain::square(2, 1.0, 16);
  TestForm xi = TestForm::tensor_bump(2, 3, {complexd(0, 0), complexd(0, 0)}, 0.3, 0.8);
  CHECK_THROWS(test_form_ddc(xi, d));  // degree 3 > n
  TestForm wide = TestForm::tensor_bump(2, 1, {complexd(0, 0), complexd(0, 0)}, 0.3, 1.2);
  CHECK_THROWS(test_form_ddc(wide, d));  // support touches the boundary ring
}
