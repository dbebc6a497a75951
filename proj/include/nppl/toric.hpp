#pragma once

// Exact and high-precision oracles for S^1n-invariant (toric) functions via
// the reduction u(z) = f(t), t_j = log|z_j|^2, f convex. The dictionary used
// throughout (normalization dd^c = (i/2pi) d dbar):
//
//   mass of dd^c u_1 ^ ... ^ dd^c u_n over Log^{-1}(E)
//     = n! * int_E MD_t(D^2 f_1, ..., D^2 f_n) dt,
//
// where MD_t is the real mixed discriminant (the n! is frozen by the
// omega_std calibration test, not trusted from the derivation). The
// background omega_std corresponds to h(t) = sum_j e^{t_j}. Divisor factors
// (affine profile parts) are handled by Poincare-Lelong style pairings, and
// piecewise-linear profiles by exact subdifferential (polytope) volumes.

#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nppl/bump.hpp"
#include "nppl/psh.hpp"

namespace nppl {

// --- exact rationals (for the PL path) ---------------------------------------

struct Rat {
  long long num = 0, den = 1;

  Rat() = default;
  Rat(long long n) : num(n), den(1) {}
  Rat(long long n, long long d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) { num = -num; den = -den; }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
    if (num == 0) den = 1;
  }

  friend Rat operator+(Rat a, Rat b) { return Rat(a.num * b.den + b.num * a.den, a.den * b.den); }
  friend Rat operator-(Rat a, Rat b) { return Rat(a.num * b.den - b.num * a.den, a.den * b.den); }
  friend Rat operator*(Rat a, Rat b) { return Rat(a.num * b.num, a.den * b.den); }
  friend Rat operator/(Rat a, Rat b) { return Rat(a.num * b.den, a.den * b.num); }
  friend bool operator==(Rat a, Rat b) { return a.num == b.num && a.den == b.den; }
  friend bool operator<(Rat a, Rat b) { return a.num * b.den < b.num * a.den; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// --- profile expression tree in t-space ---------------------------------------

struct TJet {
  bool finite = true;
  double v = 0.0;
  std::array<double, kMaxDim> g{};
  std::array<double, kMaxDim * kMaxDim> h{};
};

struct TNode;
using TProfile = std::shared_ptr<const TNode>;

struct TNode {
  enum class Kind { Const, Affine, ExpAffine, Sum, LSE, PowerLog, Max, SMax };
  Kind kind = Kind::Const;
  int dim = 1;
  double c0 = 0.0;                       // Const / Affine constant / LSE term shift
  std::array<double, kMaxDim> lin{};     // Affine / ExpAffine exponents
  double w = 1.0;                        // ExpAffine weight (> 0)
  std::vector<double> coeffs;            // Sum
  std::vector<TProfile> kids;            // Sum / Max / SMax
  std::vector<std::pair<std::array<double, kMaxDim>, double>> lse;  // LSE: (a_i, c_i): log sum e^{<a_i,t>+c_i}
  double delta = 0.0;                    // SMax
  double eps = 0.0;                      // PowerLog: -(-L)^eps with L = kids[0]
};

TProfile tprofile_const(int dim, double c);
TProfile tprofile_affine(int dim, double c0, std::array<double, kMaxDim> lin);
TProfile tprofile_exp(int dim, double w, std::array<double, kMaxDim> expo);
TProfile tprofile_sum(std::vector<double> coeffs, std::vector<TProfile> kids);
TProfile tprofile_lse(int dim, std::vector<std::pair<std::array<double, kMaxDim>, double>> terms);
TProfile tprofile_powerlog(double eps, TProfile lse_child);
TProfile tprofile_max(std::vector<TProfile> kids);
TProfile tprofile_smax(TProfile a, TProfile b, double delta);

double tprofile_value(const TProfile& f, const double* t);
bool tprofile_jet(const TProfile& f, const double* t, TJet& out);

// --- ConvexProfile ------------------------------------------------------------

struct TBox {
  // t-coordinate box; lo_j = -inf allowed.
  std::array<double, kMaxDim> lo{{-kInf, -kInf, -kInf}};
  std::array<double, kMaxDim> hi{{0, 0, 0}};
  static constexpr double kInf = 1e300;

  static TBox rays(int dim, std::array<double, kMaxDim> hi);
};

struct PlPiece {
  std::array<Rat, 2> a{};  // gradient (n <= 2)
  double c = 0.0;          // intercept
};

struct MaxFamilyBranch {
  double alpha = 0.0;  // coefficient of t1
  double beta = 0.0;   // coefficient of X = e^{t2}
  double c = 0.0;      // constant
};

struct MaxFamily {
  std::vector<MaxFamilyBranch> branches;
};

struct ConvexProfile {
  int dim = 1;
  TProfile root;
  // Structure tags filled by the classifier when applicable.
  std::optional<std::vector<PlPiece>> pl;        // pure max-affine (n <= 2)
  std::optional<MaxFamily> family;               // max(alpha t1 + beta e^{t2} + c)
  std::array<double, kMaxDim> divisor_coeffs{};  // affine t_j parts split off the smooth part

  std::string describe() const;
};

struct NonToricError : std::invalid_argument {
  std::string subterm;
  explicit NonToricError(std::string term)
      : std::invalid_argument("non-toric subterm: " + term), subterm(std::move(term)) {}
};

// Structural reduction of a toric catalog entry; throws NonToricError with
// the offending subterm otherwise. Validates evaluate(u, z) == f(log|z|^2)
// at random sample points to 1e-12 relative and certifies convexity /
// monotonicity on a sample grid.
ConvexProfile toric_profile(const PshSpec& u, bool validate = true, std::uint64_t seed = 17);

// Adapter so a ConvexProfile can be used as a PshSpec (the Toric variant).
std::shared_ptr<const ToricEval> toric_eval_of(const ConvexProfile& f);

// --- masses ---------------------------------------------------------------------

// Frozen by the Sum e^{t_j} calibration test against the grid engine.
double toric_calibration_constant(int n);  // = n!

struct MaMassResult {
  double value = 0.0;
  double err_est = 0.0;
};

// Smooth quadrature path: n! int_E MD_t(D^2 f x p, D^2 h x (n-p)) dt with
// h = sum e^{t_j}. Rejects profiles whose Hessian is indefinite beyond
// tolerance on the quadrature nodes.
MaMassResult real_ma_mass(const ConvexProfile& f, const TBox& E, int p, double tol = 1e-9);

// Exact PL path (p = n, n <= 2): subdifferential image volume over E as a
// sum of dual-cell polytope volumes at subdivision vertices, times n!.
Rat pl_exact_mass(const std::vector<PlPiece>& pieces, int n, const TBox& E);

// --- max-family sweep (Examples 5.6 / 5.8, Lemma 5.4 paths) ---------------------
//
// vol(subdifferential of F over {t1 <= T1} x {X in (0, Xmax]}), optionally
// weighted by a radial profile in X. Events where the fiber kink pattern
// changes contribute polygon atoms; creases contribute exact segment sweeps.
struct FamilyVolResult {
  double vol = 0.0;
  std::vector<std::string> flags;  // kink-position or pattern warnings
};

FamilyVolResult family_subdiff_vol(const MaxFamily& F, double T1, double Xmax,
                                   const std::function<double(double)>* weightX = nullptr);

// Complex MA masses over Log^{-1}: square and mixed-with-smooth (gamma * X)
// via polarization in the beta coefficients.
double family_square_mass(const MaxFamily& F, double T1, double Xmax,
                          const std::function<double(double)>* weightX = nullptr,
                          std::vector<std::string>* flags = nullptr);
double family_mixed_mass(const MaxFamily& F, double gamma, double T1, double Xmax,
                         const std::function<double(double)>* weightX = nullptr,
                         std::vector<std::string>* flags = nullptr);

// --- radial energy (Example 4.2 oracle) -----------------------------------------

struct RadialEnergyResult {
  bool divergent = false;
  double value = 0.0;     // finite case: the integral; divergent case: last partial
  double err_est = 0.0;
  double exponent = 0.0;  // divergent case: fitted power of the depth cutoff
};

// int_{E cap {L > -depth}} |f| MD_t(D^2 f x j, D^2 h x (n-j)) dt * n!, where
// L is the singular gauge (log|f|^2 profile) of u. Detects a non-integrable
// endpoint and reports the divergence exponent in the depth instead.
RadialEnergyResult radial_energy_integral(const PshSpec& u, int j, double depth,
                                          const TBox& E, double tol = 1e-9);

// --- divisor pairings -------------------------------------------------------------

// <[z_axis = 0] ^ wedge of const forms, chi> for a tensor-product bump in
// C^2: chi_axis(center) * int_0^inf q_other(X) dX * (const form coefficient).
double divisor_bump_pairing(int axis, const TestForm& bump, const HMat& other_form);

}  // namespace nppl
