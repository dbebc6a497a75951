#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "nppl/dsl.hpp"
#include "nppl/toric.hpp"

using namespace nppl;

namespace {

// Staircase oracle: dim C[z] / (z1^a, z2^b) by counting lattice points under
// the staircase.
int staircase_count(int a, int b) {
  int count = 0;
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) {
      (void)i;
      (void)j;
      ++count;
    }
  return count;
}

TBox polydisc_box(double r1, double r2) {
  return TBox::rays(2, {2 * std::log(r1), 2 * std::log(r2), 0});
}

}  // namespace

TEST_CASE("toric_profile: log|z1|^2 reduces to f(t) = t1") {
  PshSpec u = parse_psh("log(abs2(z1))", 1);
  ConvexProfile f = toric_profile(u);
  double t = -3.7;
  CHECK(tprofile_value(f.root, &t) == doctest::Approx(-3.7));
  CHECK(f.divisor_coeffs[0] == doctest::Approx(1.0));
}

TEST_CASE("toric_profile: |z|^2 in C^2 reduces to e^{t1} + e^{t2}") {
  PshSpec u = parse_psh("abs2(z1) + abs2(z2)", 2);
  ConvexProfile f = toric_profile(u);
  double t[2] = {std::log(0.25), std::log(0.09)};
  CHECK(tprofile_value(f.root, t) == doctest::Approx(0.34).epsilon(1e-13));
}

TEST_CASE("toric_profile: log(|z1^2|^2 + |z2^3|^2) reduces to lse(2 t1, 3 t2)") {
  PshSpec u = parse_psh("log(abs2(z1^2) + abs2(z2^3))", 2);
  ConvexProfile f = toric_profile(u);
  double t[2] = {-1.0, -2.0};
  double exact = std::log(std::exp(-2.0) + std::exp(-6.0));
  CHECK(tprofile_value(f.root, t) == doctest::Approx(exact).epsilon(1e-13));
}

TEST_CASE("toric_profile rejects non-toric specs with the offending subterm") {
  PshSpec u = parse_psh("log(abs2(z1 - 1))", 1);  // non-monomial
  CHECK_THROWS_AS(toric_profile(u), NonToricError);
}

TEST_CASE("real_ma_mass calibration: full MA of sum e^{t_j} over a polydisc box") {
  // p = n = 2: expect n! r1^2 r2^2 = 2 * 1 * 0.36, to 0.1%
  PshSpec u = parse_psh("abs2(z1) + abs2(z2)", 2);
  ConvexProfile f = toric_profile(u);
  auto r = real_ma_mass(f, polydisc_box(1.0, 0.6), 2, 1e-8);
  CHECK(std::abs(r.value - 0.72) / 0.72 < 1e-3);

  // p = 1 against omega_std: same value for this profile (alpha = omega)
  auto r1 = real_ma_mass(f, polydisc_box(1.0, 0.6), 1, 1e-8);
  CHECK(std::abs(r1.value - 0.72) / 0.72 < 1e-3);

  // n = 1 disc: mass r^2
  PshSpec u1 = parse_psh("abs2(z1)", 1);
  ConvexProfile f1 = toric_profile(u1);
  TBox b1 = TBox::rays(1, {2 * std::log(0.8), 0, 0});
  CHECK(real_ma_mass(f1, b1, 1, 1e-9).value == doctest::Approx(0.64).epsilon(1e-4));
}

TEST_CASE("rank-one log-sum-exp has vanishing top mass") {
  PshSpec u = parse_psh("log(abs2(z1) + abs2(z2))", 2);
  ConvexProfile f = toric_profile(u);
  auto r = real_ma_mass(f, polydisc_box(0.9, 0.9), 2, 1e-9);
  CHECK(std::abs(r.value) < 1e-8);
}

TEST_CASE("real_ma_mass rejects indefinite (non-psh) profiles") {
  TProfile neg = tprofile_sum({-1.0}, {tprofile_exp(2, 1.0, {1.0, 0.0, 0.0})});
  ConvexProfile f;
  f.dim = 2;
  f.root = tprofile_sum({1.0, 1.0}, {neg, tprofile_exp(2, 1.0, {0.0, 1.0, 0.0})});
  CHECK_THROWS(real_ma_mass(f, polydisc_box(0.9, 0.9), 2));
}

TEST_CASE("radial energy: PowerLog threshold at eps = 1/2 with stated exponents") {
  TBox E = polydisc_box(0.9, 0.9);
  {  // eps = 0.4: finite, integrand tail exponent 2 eps - 1 = -0.2 < 0
    PshSpec u = power_log(0.4, PolyTuple({Poly::variable(2, 0)}));
    auto r = radial_energy_integral(u, 1, 256.0, E, 1e-10);
    CHECK(!r.divergent);
    // closed-form partial integral: |g| g'' = eps(1-eps)(-t)^{2eps-2} over
    // t in [-depth, T], T = 2 log 0.9, times the z2 background r2^2
    double eps = 0.4, T = 2 * std::log(0.9);
    double exact = 0.81 * eps * (1 - eps) *
                   (std::pow(-T, 2 * eps - 1) - std::pow(256.0, 2 * eps - 1)) / (1 - 2 * eps);
    CHECK(r.value == doctest::Approx(exact).epsilon(2e-2));
    // the tail estimate accounts for most of the remaining mass
    double full = 0.81 * eps * (1 - eps) * std::pow(-T, 2 * eps - 1) / (1 - 2 * eps);
    CHECK(r.value + r.err_est == doctest::Approx(full).epsilon(0.35));
  }
  {  // eps = 0.75: divergent with exponent 2 eps - 1 = +0.5 in the depth
    PshSpec u = power_log(0.75, PolyTuple({Poly::variable(2, 0)}));
    auto r = radial_energy_integral(u, 1, 256.0, E, 1e-10);
    CHECK(r.divergent);
    CHECK(r.exponent == doctest::Approx(0.5).epsilon(0.15));
  }
  {  // smooth |z|^2: finite and depth-independent once the mask saturates
    PshSpec u = parse_psh("abs2(z1) + abs2(z2)", 2);
    auto a = radial_energy_integral(u, 1, 64.0, E, 1e-9);
    auto b = radial_energy_integral(u, 1, 128.0, E, 1e-9);
    CHECK(!a.divergent);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
  }
}

TEST_CASE("pl_exact_mass: monomial ideal multiplicities against the staircase oracle") {
  TBox E;
  E.lo = {-1e6, -1e6, 0};
  E.hi = {10, 10, 0};
  {  // (z1^2, z2^3): conv{(0,0),(2,0),(0,3)} has area 3, mass 2 * 3 = 6
    std::vector<PlPiece> pieces = {{{Rat(2), Rat(0)}, 0.0}, {{Rat(0), Rat(3)}, 0.0}, {{Rat(0), Rat(0)}, -30.0}};
    Rat m = pl_exact_mass(pieces, 2, E);
    CHECK(m == Rat(6));
    CHECK(m.to_double() == doctest::Approx(staircase_count(2, 3)));
  }
  {  // (z1, z2): multiplicity 1
    std::vector<PlPiece> pieces = {{{Rat(1), Rat(0)}, 0.0}, {{Rat(0), Rat(1)}, 0.0}, {{Rat(0), Rat(0)}, -20.0}};
    Rat m = pl_exact_mass(pieces, 2, E);
    CHECK(m == Rat(1));
    CHECK(m.to_double() == doctest::Approx(staircase_count(1, 1)));
  }
  {  // affine profile: flat gradient image, zero mass
    std::vector<PlPiece> pieces = {{{Rat(1), Rat(1)}, 0.0}};
    CHECK(pl_exact_mass(pieces, 2, E) == Rat(0));
  }
}

TEST_CASE("pl_exact_mass is invariant under refining the piece description") {
  TBox E;
  E.lo = {-1e6, -1e6, 0};
  E.hi = {10, 10, 0};
  std::vector<PlPiece> pieces = {{{Rat(2), Rat(0)}, 0.0}, {{Rat(0), Rat(3)}, 0.0}, {{Rat(0), Rat(0)}, -30.0}};
  Rat m0 = pl_exact_mass(pieces, 2, E);
  pieces.push_back({{Rat(1), Rat(1)}, -100.0});  // redundant piece below the envelope
  CHECK(pl_exact_mass(pieces, 2, E) == m0);
}

TEST_CASE("pl_exact_mass in one variable: slope jump through the region") {
  TBox E;
  E.lo = {-1e6, 0, 0};
  E.hi = {0.0, 0, 0};
  std::vector<PlPiece> pieces = {{{Rat(3), Rat(0)}, 0.0}, {{Rat(0), Rat(0)}, -12.0}};
  CHECK(pl_exact_mass(pieces, 1, E) == Rat(3));
}

TEST_CASE("max-family sweep: Example 5.6 mass (1 + c) r^2, linear in c") {
  // u_lambda = max(log|z1|^2 + |z2|^2, c |z2|^2 - lambda)
  double T1 = 2 * std::log(0.5), Xmax = 0.25, lambda = 8.0;
  for (double c : {1.0, 2.0}) {
    MaxFamily F;
    F.branches = {{1.0, 1.0, 0.0}, {0.0, c, -lambda}};
    double mass = family_square_mass(F, T1, Xmax);
    CHECK(mass == doctest::Approx((1.0 + c) * Xmax).epsilon(1e-12));
  }
}

TEST_CASE("max-family sweep agrees with smooth-regularization quadrature") {
  PshSpec u = parse_psh("log(abs2(z1)) + abs2(z2)", 2);
  PshSpec v = parse_psh("abs2(z2)", 2);
  PshSpec reg = max_reg(u, v, 6.0, 0.3);
  ConvexProfile f = toric_profile(reg, false);
  auto r = real_ma_mass(f, polydisc_box(0.5, 0.5), 2, 1e-8);
  MaxFamily F;
  F.branches = {{1.0, 1.0, 0.0}, {0.0, 1.0, -6.0}};
  double exact = family_square_mass(F, 2 * std::log(0.5), 0.25);
  CHECK(r.value == doctest::Approx(exact).epsilon(5e-3));
}

TEST_CASE("mixed masses via beta-shift polarization: Lemma 5.4 toric identity") {
  // u = log|z1|^2 + |z2|^2, v = |z2|^2, p = 2, ell1 = ell2 = 4
  double T1 = 2 * std::log(0.5), Xmax = 0.25, ell = 4.0;
  MaxFamily u_ell;
  u_ell.branches = {{1.0, 1.0, 0.0}, {0.0, 1.0, -ell}};
  double lhs = family_square_mass(u_ell, T1, Xmax);
  // term 1: dd^c u_ell ^ <dd^c u>; the non-pluripolar part is smooth with
  // d/dt2 coefficient gamma = 1
  double term1 = family_mixed_mass(u_ell, 1.0, T1, Xmax);
  // term 2: (dd^c u_ell - <dd^c u>) ^ dd^c v; the <dd^c u> ^ dd^c v part
  // vanishes (both factors rank one in the same direction)
  double term2 = family_mixed_mass(u_ell, 1.0, T1, Xmax);
  double rhs = term1 + term2;
  CHECK(lhs == doctest::Approx(2.0 * Xmax).epsilon(1e-12));
  CHECK(std::abs(lhs - rhs) <= 0.05 * std::abs(rhs));
}

TEST_CASE("varannan toric masses bifurcate with gap 2 (1 + 1/m) x plateau") {
  SupStarData data = build_supstar(9, 0.2);
  double Xmax = 0.04;  // |w| <= 0.2
  double T1 = -1.0;
  auto mass_at = [&](double ell) {
    MaxFamily F;
    for (auto& b : data.branches) F.branches.push_back({b.alpha, b.beta, -b.a});
    F.branches.push_back({0.0, 0.0, -ell});
    return family_square_mass(F, T1, Xmax);
  };
  // consecutive even/odd cutoff pair k: gap = 2 (1 + 1/(2k)) Xmax
  // (corner atom of the odd branch plus the crease entering between them)
  for (int k = 1; k <= 4; ++k) {
    double even = mass_at(data.shell_ell[static_cast<std::size_t>(2 * k - 1)]);
    double odd = mass_at(data.shell_ell[static_cast<std::size_t>(2 * k)]);
    double gap = odd - even;
    double predicted = 2.0 * (1.0 + 1.0 / (2 * k)) * Xmax;
    CHECK(std::abs(gap - predicted) <= 0.15 * predicted);
  }
  // even-cutoff increments shrink: the crease tail sum_j 1/(j(j+1)) is Cauchy
  double d1 = mass_at(data.shell_ell[3]) - mass_at(data.shell_ell[1]);
  double d2 = mass_at(data.shell_ell[5]) - mass_at(data.shell_ell[3]);
  double d3 = mass_at(data.shell_ell[7]) - mass_at(data.shell_ell[5]);
  CHECK(d1 >= -1e-12);
  CHECK(d2 <= d1 + 1e-12);
  CHECK(d3 <= d2 + 1e-12);
}

TEST_CASE("divisor pairing: [z1=0] ^ dd^c|z2|^2 against a plateau bump") {
  TestForm bump = TestForm::tensor_bump(2, 2, {complexd(0, 0), complexd(0, 0)}, 0.3, 0.5);
  HMat ddc_abs2(2);
  ddc_abs2.at(1, 1) = 1.0;
  double v = divisor_bump_pairing(0, bump, ddc_abs2);
  CHECK(v > 0.09);  // at least the plateau disc area |w|^2 <= 0.09
  CHECK(v < 0.25);  // at most the support disc area
}

TEST_CASE("convexity midpoint inequality flags a non-convex fake profile") {
  ConvexProfile f;
  f.dim = 1;
  f.root = tprofile_sum({-1.0}, {tprofile_exp(1, 1.0, {1.0, 0.0, 0.0})});
  double a = -3.0, b = -1.0, mid = -2.0;
  double fa = tprofile_value(f.root, &a), fb = tprofile_value(f.root, &b), fm = tprofile_value(f.root, &mid);
  CHECK(fm > 0.5 * (fa + fb));  // concave sample, as the certificate would detect
}
