#pragma once

// The core calculus on grids: non-pluripolar product masses via cutoff
// limits, G_k membership energies, the weak pairings defining [dd^c u]^p and
// S_p(u), regularization sweeps (Theorems 1.3/1.4), Lelong-number
// estimation, and the Lemma 5.4 identity check.
//
// All pairings are computed with analytic 2-jets from the catalog; the
// plurifine masks {gauge > -ell} come from exact evaluation, so the
// non-pluripolar masses never see a corner layer (locality of the operator
// on {u > -ell}).

#include <functional>

#include "nppl/bump.hpp"
#include "nppl/field_ops.hpp"
#include "nppl/schedule.hpp"
#include "nppl/toric.hpp"

namespace nppl {

// --- low-level streaming wedge integral --------------------------------------

struct WedgeSlot {
  enum class Kind { SpecHessian, GradOuter, ChiHessian, Const };
  Kind kind = Kind::Const;
  PshSpec spec;
  const TestForm* chi = nullptr;
  HMat constant;

  static WedgeSlot of_spec(PshSpec s) {
    WedgeSlot w; w.kind = Kind::SpecHessian; w.spec = std::move(s); return w;
  }
  // du ^ d^c u as a (1,1)-form: the rank-one matrix g g^* from the jet.
  static WedgeSlot of_grad_outer(PshSpec s) {
    WedgeSlot w; w.kind = Kind::GradOuter; w.spec = std::move(s); return w;
  }
  static WedgeSlot of_chi(const TestForm& c) {
    WedgeSlot w; w.kind = Kind::ChiHessian; w.chi = &c; return w;
  }
  static WedgeSlot of_const(HMat m) {
    WedgeSlot w; w.kind = Kind::Const; w.constant = std::move(m); return w;
  }
};

struct WeightSpec {
  enum class Kind { None, Spec, AbsSpec, Chi };
  Kind kind = Kind::None;
  PshSpec spec;
  const TestForm* chi = nullptr;

  static WeightSpec none() { return {}; }
  static WeightSpec of_spec(PshSpec s) {
    WeightSpec w; w.kind = Kind::Spec; w.spec = std::move(s); return w;
  }
  static WeightSpec of_abs_spec(PshSpec s) {
    WeightSpec w; w.kind = Kind::AbsSpec; w.spec = std::move(s); return w;
  }
  static WeightSpec of_chi(const TestForm& c) {
    WeightSpec w; w.kind = Kind::Chi; w.chi = &c; return w;
  }
};

// Integral over the grid of weight * density(slot_1 ^ ... ^ slot_n), masked
// by region fractions, the boundary ring, and optionally {gauge > -ell}.
double grid_wedge_integral(const GridDomain& domain, const std::vector<double>& region_weights,
                           const std::vector<WedgeSlot>& slots, const WeightSpec& weight,
                           const PshSpec* gauge, double ell, int boundary_ring = 1);

// Same integral for a whole cutoff schedule in one grid pass: per-cell
// contributions and gauge values are computed once, then each level reduces
// through the fixed pairwise tree.
std::vector<double> grid_wedge_trace(const GridDomain& domain, const std::vector<double>& region_weights,
                                     const std::vector<WedgeSlot>& slots, const WeightSpec& weight,
                                     const PshSpec* gauge, const std::vector<double>& ells,
                                     int boundary_ring = 1);

// --- operations -----------------------------------------------------------------

struct NpMassOptions {
  bool u_weight = false;   // integrate u * <dd^c u>^p ^ omega^{n-p} (energy form)
  bool abs_weight = false; // |u| instead of u (G_k checks)
  int boundary_ring = 1;
};

// Non-pluripolar product mass report: for each ell, mass over
// O_ell = {gauge > -ell} inside `region` of <dd^c u>^p ^ omega_std^{n-p}.
// Monotone nondecreasing in ell when unweighted (plurifine locality);
// violations beyond roundoff are flagged.
MassReport np_product_mass(const PshSpec& u, int p, const GridDomain& grid, const Region& region,
                           const CutoffSchedule& schedule, const NpMassOptions& opts = {});

struct GkVerdict {
  bool member = false;
  std::vector<MassReport> energies;  // index j = 1..k, weighted by |u|
  std::vector<double> divergence_exponents;  // 0 when converged
};

// Locally finite non-pluripolar energy of order k: all j <= k weighted
// reports must converge.
GkVerdict gk_membership(const PshSpec& u, int k, const GridDomain& grid, const Region& region,
                        const CutoffSchedule& schedule);

struct CurrentPairing {
  std::string current;  // "np", "full" ([dd^c u]^p), or "residual" (S_p)
  int p = 1;
  double value = 0.0;
  MassReport trace;     // schedule trace behind the value
};

enum class BracketKind { Full, Np, Residual };

struct BracketResult {
  CurrentPairing full, np, residual;
};

// <[dd^c u]^p, xi> = int u <dd^c u>^{p-1} ^ dd^c xi (Definition of the
// extended operator), <<dd^c u>^p, xi>, and their difference S_p(u).
// Requires u in G_{p-1} for full/residual; set assume_gk to skip the check.
BracketResult bracket_pairing(const PshSpec& u, int p, const TestForm& xi, const GridDomain& grid,
                              const CutoffSchedule& schedule, bool assume_gk = false);

struct ConvergenceTrace {
  std::vector<double> ell;
  std::vector<double> value;           // <(dd^c u_ell)^p, xi> per ell
  std::vector<std::string> flags;      // corner-layer flags per ell
  double extrapolated = 0.0;
  double predicted = 0.0;              // [dd^c u]^p + sum_j S_j(u) ^ (dd^c v)^{p-j} against xi
  std::vector<double> predicted_terms; // [full_p, (full_j - np_j) * ...]
  double gap = 0.0;                    // |extrapolated - predicted|
  Verdict verdict;
};

// Theorem 1.4 sweep: u_ell = chi_ell o (u - v) + v, pairing (dd^c u_ell)^p
// against xi, with the independently computed predicted limit.
ConvergenceTrace regularization_sweep(const PshSpec& u, const PshSpec& v,
                                      const std::function<ChiFunction(double ell, double delta)>& chi_family,
                                      int p, const TestForm& xi, const GridDomain& grid,
                                      const CutoffSchedule& schedule, const CutoffSchedule& mask_schedule);

struct LelongEstimate {
  double value = 0.0;       // extrapolated bracket midpoint
  double width = 0.0;       // bracket width at the last radius
  bool conclusive = false;  // width <= 25% of value
  std::vector<double> radii, lower, upper;
};

// nu = lim mass(B_r) / r^{2(n-p)} via plateau bumps bracketing 1_{B_r}.
LelongEstimate lelong_estimate(const std::function<double(const TestForm&)>& pairing_provider, int n, int p,
                               const std::array<complexd, kMaxDim>& point, const std::vector<double>& radii,
                               double margin = 0.2);

struct BudgetedSumReport {
  std::vector<double> coefficients;  // chosen b_i (rejected terms get 0)
  std::vector<double> decrements;    // measured per-term energy decrement
  std::vector<bool> accepted;
  PshSpec sum;
};

// Realizes the inductive choice of b_i: coefficients are halved until the
// measured G_k energy decrement of each partial sum is <= C / 2^i. A term
// whose own energy diverges is rejected. budget_C <= 0 degenerates to the
// first term alone.
BudgetedSumReport budgeted_sum(const std::vector<PshSpec>& terms, double budget_C, int k,
                               const GridDomain& grid, const Region& region,
                               const CutoffSchedule& schedule);

struct DynamitResult {
  double lhs = 0.0, rhs = 0.0;
  double residual = 0.0;
  std::vector<double> rhs_terms;
};

// Lemma 5.4 identity: dd^c u_{l_p} ^...^ dd^c u_{l_1} =
//   dd^c u_{l_p} ^ <dd^c u>^{p-1}
//   + sum_j (dd^c u_{l_j} - <dd^c u>) ^ <dd^c u>^{j-1} ^ (dd^c v)^{p-j},
// with u_l = max(u, v - l), paired against xi; both sides computed
// independently. Requires l_1 >= ... >= l_p.
DynamitResult dynamit_identity_check(const PshSpec& u, const PshSpec& v, const std::vector<double>& ells,
                                     const TestForm& xi, const GridDomain& grid,
                                     const CutoffSchedule& mask_schedule, double corner_delta = 0.0);

}  // namespace nppl
