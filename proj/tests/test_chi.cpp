#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "nppl/chi.hpp"

using namespace nppl;

namespace {
const std::vector<double> kSamples = {-8.0, -4.0, -2.0, -1.0, -0.5, -0.1, 0.0};
}

TEST_CASE("chi families are nondecreasing, convex, bounded below, and >= t") {
  std::vector<ChiFunction> chis = {ChiFunction::hard_max(2.0), ChiFunction::smooth_max(2.0, 0.5),
                                   ChiFunction::log_exp(0.1)};
  for (auto& chi : chis) {
    double prev = -1e308, prev_d = 0.0;
    for (double t = -20.0; t <= 2.0; t += 0.05) {
      double v = chi.value(t);
      CHECK(v >= t - 1e-12);
      CHECK(v >= prev - 1e-12);       // nondecreasing
      double d = chi.d1(t);
      CHECK(d >= prev_d - 1e-12);     // convex (derivative nondecreasing)
      CHECK(chi.d2(t) >= -1e-14);
      prev = v;
      prev_d = d;
    }
    CHECK(chi.value(-1e9) > -2e9);  // bounded below
  }
}

TEST_CASE("chi tightens to t as the family parameter tightens") {
  for (double t : kSamples) {
    double prev = 1e308;
    for (double ell : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      double v = ChiFunction::hard_max(ell).value(t);
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
    CHECK(prev == doctest::Approx(t));
    prev = 1e308;
    for (double eps : {0.5, 0.1, 0.01, 1e-6, 1e-12}) {
      double v = ChiFunction::log_exp(eps).value(t);
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
    CHECK(prev == doctest::Approx(t).epsilon(1e-6));
  }
}

TEST_CASE("HardMax superposition is exact: g is the Dirac mass at ell") {
  auto rep = chi_superposition_residual(ChiFunction::hard_max(3.0), kSamples);
  CHECK(rep.max_residual == 0.0);
  CHECK(rep.mass_defect == 0.0);
}

TEST_CASE("SmoothMax superposition residual below 1e-6; total mass within 1e-8") {
  auto rep = chi_superposition_residual(ChiFunction::smooth_max(2.0, 0.7), kSamples, 1e-10);
  CHECK(rep.max_residual < 1e-6);
  CHECK(rep.mass_defect < 1e-8);
}

TEST_CASE("LogExp superposition residual below 1e-6; total mass within 1e-8") {
  auto rep = chi_superposition_residual(ChiFunction::log_exp(0.2), kSamples, 1e-10);
  CHECK(rep.max_residual < 1e-6);
  CHECK(rep.mass_defect < 1e-8);
}

TEST_CASE("adaptive quadrature hits analytic integrals") {
  double v = adaptive_simpson([](double x) { return std::sin(x); }, 0.0, 3.14159265358979323846, 1e-12);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-10));
}
