#pragma once

// The catalog of (quasi-)psh functions: an expression tree with exact
// evaluation (-inf on the singular locus), analytic 2-jets wherever smooth,
// known singular loci, and the regularization constructors chi o (u-v) + v.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nppl/chi.hpp"
#include "nppl/jet.hpp"
#include "nppl/poly.hpp"

namespace nppl {

// Toric profile hook (implemented by the toric oracle).
struct ToricEval {
  virtual ~ToricEval() = default;
  virtual int dim() const = 0;
  // t_j = log|z_j|^2; value may be -inf.
  virtual double value(const double* t) const = 0;
  // Jet in t-coordinates: f, g_j = df/dt_j, h_jk = d2f/dt_j dt_k.
  // Returns false where not smooth / not finite.
  virtual bool jet(const double* t, double& f, double* g, double* h) const = 0;
  virtual std::string describe() const = 0;
};

struct SupStarBranch {
  double alpha = 1.0;  // coefficient of log|z|^2
  double beta = 0.0;   // coefficient of |w|^2 (0 for even branches, 2 for odd)
  double a = 0.0;      // subtracted constant a_k
};

struct SupStarData {
  std::vector<SupStarBranch> branches;  // index k = 1..K in order
  std::vector<double> shell_ell;        // ell_k: cutoff levels aimed mid-shell
  double w_radius = 0.2;                // |w| radius the shells were built for
};

struct PshNode;
using PshSpec = std::shared_ptr<const PshNode>;

struct PshNode {
  enum class Kind { Const, Abs2, Log, Pow, PowerLog, NegPow, Sum, Prod, Max, SMax, ChiComp, SupStar, Toric, Cutoff };

  Kind kind = Kind::Const;
  int n = 1;  // ambient complex dimension

  double a = 0.0;            // Const: value; Pow: exponent; PowerLog: eps; Cutoff: plateau^2
  PolyTuple polys;           // Abs2 / PowerLog
  std::vector<double> coeffs;  // Sum
  std::vector<PshSpec> kids;
  double delta = 0.0;        // SMax; Cutoff: support^2
  std::optional<ChiFunction> chi;  // ChiComp
  SupStarData supstar;       // SupStar
  std::shared_ptr<const ToricEval> toric;  // Toric
};

// --- constructors ----------------------------------------------------------

PshSpec psh_const(int n, double c);
PshSpec psh_abs2(PolyTuple f);                       // |f|^2
PshSpec psh_log(PshSpec child);                      // log(child), BOTTOM where child <= 0
PshSpec psh_pow(PshSpec child, double a);            // child^a, child >= 0
PshSpec psh_sum(std::vector<double> coeffs, std::vector<PshSpec> kids);
// g(child) with g(t) = -(-t)^eps (child <= 0; BOTTOM propagates).
PshSpec psh_negpow(PshSpec child, double eps);
PshSpec psh_prod(PshSpec a, PshSpec b);
PshSpec psh_max(PshSpec a, PshSpec b);
PshSpec psh_smax(PshSpec a, PshSpec b, double delta);
PshSpec psh_toric(std::shared_ptr<const ToricEval> f, int n);
// C^4 plateau cutoff q(child): 1 where child <= plateau^2, 0 where
// child >= support^2 (smooth partition-of-unity building block).
PshSpec psh_cutoff(PshSpec child, double plateau, double support);
// Substitute variables: new variable j reads old variable perm[j].
PshSpec psh_remap_vars(const PshSpec& s, int new_n, const std::array<int, kMaxDim>& perm);

// u = c log|f|^2 + b  (analytic singularities along {f = 0})
PshSpec log_norm(double c, PolyTuple f, PshSpec b = nullptr);
// u = -(-log|f|^2)^eps, eps in (0,1)
PshSpec power_log(double eps, PolyTuple f);
// chi o (u - v) + v  (Theorems 1.3/1.4 regularization; HardMax gives max(u, v - ell))
PshSpec regularize(PshSpec u, PshSpec v, const ChiFunction& chi);
// smoothed max_delta(u, v - ell)
PshSpec max_reg(PshSpec u, PshSpec v, double ell, double delta);
// sum b_i u_i with b_i > 0
PshSpec weighted_sum(const std::vector<std::pair<double, PshSpec>>& terms);
PshSpec supstar(SupStarData data);

// --- evaluation ------------------------------------------------------------

// Exact extended-real value (-inf allowed).
double evaluate(const PshSpec& s, const std::array<complexd, kMaxDim>& z);

// Analytic 2-jet; jet.finite == false on the singular locus. At C^0 corners
// (hard Max) the active branch's jet is returned.
Jet2 evaluate_jet(const PshSpec& s, const std::array<complexd, kMaxDim>& z);

// Exact algebraic description of {u = -inf} when available.
std::string singular_locus(const PshSpec& s);

// True if z lies on the singular locus (exact: evaluates the defining tuples).
bool is_singular_at(const PshSpec& s, const std::array<complexd, kMaxDim>& z);

// Canonical JSON round-trip.
std::string psh_to_json(const PshSpec& s);
PshSpec psh_from_json(const std::string& json_text);

// Structural hash for caching (FNV-1a of the canonical JSON).
std::uint64_t psh_hash(const PshSpec& s);

// --- SupStar construction (Example 5.8 truncation) --------------------------
//
// Branch k has slope alpha_k = 1 + 1/k and beta_k = 1 - (-1)^k in {0, 2}.
// The a_k are chosen greedily so consecutive branch graphs cross at
// separated depths D_k in t = log|z|^2, keeping every shell
// {|u + ell_k| < 1} on a single branch for all |w| <= w_radius. The paper
// only asks 0 << a_0 << a_1 << ...; the explicit spacing is ours.
SupStarData build_supstar(int num_branches, double w_radius = 0.2, double depth_spacing = 0.0);

}  // namespace nppl
