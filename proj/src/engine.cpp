#include "nppl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace nppl {

namespace {

// Fills per-cell contribution (weight * density * fraction * vol) and gauge
// values; masked cells get contribution 0 and gauge -inf.
void wedge_cells(const GridDomain& domain, const std::vector<double>& region_weights,
                 const std::vector<WedgeSlot>& slots, const WeightSpec& weight, const PshSpec* gauge,
                 int boundary_ring, std::vector<double>& contrib, std::vector<double>& gauge_vals) {
  const int n = domain.n;
  if (static_cast<int>(slots.size()) != n) throw std::invalid_argument("grid_wedge_integral: need n slots");
  const std::size_t m = domain.cell_count();
  if (!region_weights.empty() && region_weights.size() != m)
    throw std::invalid_argument("grid_wedge_integral: region weight size mismatch");

  std::vector<const PshNode*> distinct;
  auto spec_index = [&](const PshSpec& s) {
    for (std::size_t i = 0; i < distinct.size(); ++i)
      if (distinct[i] == s.get()) return i;
    distinct.push_back(s.get());
    return distinct.size() - 1;
  };
  std::vector<std::optional<std::size_t>> slot_spec(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].kind == WedgeSlot::Kind::SpecHessian || slots[i].kind == WedgeSlot::Kind::GradOuter)
      slot_spec[i] = spec_index(slots[i].spec);

  const double factor = wedge_density_factor(n);
  const double vol = domain.cell_volume();
  contrib.assign(m, 0.0);
  gauge_vals.assign(m, kBottom);

  std::vector<Jet2> jets(distinct.size());
  std::array<HMat, kMaxDim> mats;
  for (std::size_t c = 0; c < m; ++c) {
    double frac = region_weights.empty() ? 1.0 : region_weights[c];
    if (frac <= 0.0) continue;
    if (domain.in_boundary_ring(c, boundary_ring)) continue;
    auto z = domain.point(c);

    if (gauge) {
      double g = evaluate(*gauge, z);
      if (!std::isfinite(g)) continue;
      gauge_vals[c] = g;
    } else {
      gauge_vals[c] = 0.0;
    }

    double w = 1.0;
    if (weight.kind == WeightSpec::Kind::Spec || weight.kind == WeightSpec::Kind::AbsSpec) {
      double v = evaluate(weight.spec, z);
      if (!std::isfinite(v)) throw std::runtime_error("grid_wedge_integral: BOTTOM weight on a masked-in cell");
      w = weight.kind == WeightSpec::Kind::AbsSpec ? std::abs(v) : v;
    } else if (weight.kind == WeightSpec::Kind::Chi) {
      w = weight.chi->chi(z);
      if (w == 0.0) continue;
    }

    bool ok = true;
    for (std::size_t i = 0; i < distinct.size(); ++i) jets[i].n = 0;  // lazily filled below
    for (std::size_t i = 0; i < slots.size() && ok; ++i) {
      switch (slots[i].kind) {
        case WedgeSlot::Kind::SpecHessian:
        case WedgeSlot::Kind::GradOuter: {
          std::size_t si = *slot_spec[i];
          if (jets[si].n == 0) jets[si] = evaluate_jet(slots[i].spec, z);
          if (!jets[si].finite) { ok = false; break; }
          if (slots[i].kind == WedgeSlot::Kind::SpecHessian) {
            mats[i] = jets[si].h;
          } else {
            HMat g(n);
            add_outer(g, jets[si].g, 1.0);
            mats[i] = g;
          }
          break;
        }
        case WedgeSlot::Kind::ChiHessian:
          mats[i] = slots[i].chi->chi_jet(z).h;
          break;
        case WedgeSlot::Kind::Const:
          mats[i] = slots[i].constant;
          break;
      }
    }
    if (!ok) {
      // singular slot: legal only when a gauge mask will exclude the cell
      if (!gauge) throw std::runtime_error("grid_wedge_integral: singular Hessian on a masked-in cell");
      contrib[c] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    complexd md = mixed_discriminant(mats.data(), n);
    contrib[c] = w * factor * md.real() * frac * vol;
  }
}

}  // namespace

std::vector<double> grid_wedge_trace(const GridDomain& domain, const std::vector<double>& region_weights,
                                     const std::vector<WedgeSlot>& slots, const WeightSpec& weight,
                                     const PshSpec* gauge, const std::vector<double>& ells,
                                     int boundary_ring) {
  std::vector<double> contrib, gauge_vals;
  wedge_cells(domain, region_weights, slots, weight, gauge, boundary_ring, contrib, gauge_vals);
  const std::size_t m = contrib.size();
  std::vector<double> out;
  std::vector<double> terms(m);
  for (double ell : ells) {
    for (std::size_t c = 0; c < m; ++c) {
      bool in = gauge_vals[c] > -ell;
      double t = in ? contrib[c] : 0.0;
      if (in && std::isnan(t))
        throw std::runtime_error("grid_wedge_integral: singular Hessian on a masked-in cell");
      terms[c] = t;
    }
    out.push_back(pairwise_sum(terms));
  }
  return out;
}

double grid_wedge_integral(const GridDomain& domain, const std::vector<double>& region_weights,
                           const std::vector<WedgeSlot>& slots, const WeightSpec& weight,
                           const PshSpec* gauge, double ell, int boundary_ring) {
  return grid_wedge_trace(domain, region_weights, slots, weight, gauge, {gauge ? ell : 1.0},
                          boundary_ring)[0];
}

// --- np_product_mass ---------------------------------------------------------------

MassReport np_product_mass(const PshSpec& u, int p, const GridDomain& grid, const Region& region,
                           const CutoffSchedule& schedule, const NpMassOptions& opts) {
  if (p < 0 || p > grid.n) throw std::invalid_argument("np_product_mass: p out of range");
  if (!region.strictly_inside(grid, opts.boundary_ring) && region.kind != Region::Kind::Full)
    throw std::invalid_argument("np_product_mass: region touches the grid boundary ring");
  schedule.validate();
  PshSpec gauge = schedule.gauge ? schedule.gauge : u;

  std::vector<WedgeSlot> slots;
  for (int i = 0; i < p; ++i) slots.push_back(WedgeSlot::of_spec(u));
  for (int i = p; i < grid.n; ++i) slots.push_back(WedgeSlot::of_const(HMat::identity(grid.n)));
  WeightSpec w = WeightSpec::none();
  if (opts.u_weight) w = opts.abs_weight ? WeightSpec::of_abs_spec(u) : WeightSpec::of_spec(u);

  auto region_w = region.weights(grid);
  MassReport rep;
  std::vector<double> masses = grid_wedge_trace(grid, region_w, slots, w, &gauge, schedule.ell,
                                                opts.boundary_ring);
  for (std::size_t i = 0; i < schedule.ell.size(); ++i) {
    double mass = masses[i];
    rep.ell.push_back(schedule.ell[i]);
    rep.mass.push_back(mass);
    std::string flag;
    if (!opts.u_weight && i > 0) {
      double tol = 1e-12 * std::max(1.0, std::abs(mass));
      if (mass < rep.mass[i - 1] - tol) flag = "plurifine-monotonicity-violation";
    }
    rep.flags.push_back(flag);
  }
  rep.verdict = assess_convergence(rep.ell, rep.mass, rep.flags, &rep.extrapolation_method);
  return rep;
}

// --- gk_membership ------------------------------------------------------------------

GkVerdict gk_membership(const PshSpec& u, int k, const GridDomain& grid, const Region& region,
                        const CutoffSchedule& schedule) {
  if (k < 1 || k > grid.n - 1) throw std::invalid_argument("gk_membership: need 1 <= k <= n-1");
  GkVerdict out;
  out.member = true;
  NpMassOptions opts;
  opts.u_weight = true;
  opts.abs_weight = true;  // u <= 0 is arranged by shifting on bounded regions
  for (int j = 1; j <= k; ++j) {
    MassReport rep = np_product_mass(u, j, grid, region, schedule, opts);
    out.divergence_exponents.push_back(rep.verdict.diverging() ? rep.verdict.exponent : 0.0);
    out.member = out.member && rep.verdict.converged();
    out.energies.push_back(std::move(rep));
  }
  return out;
}

// --- bracket_pairing ----------------------------------------------------------------

namespace {

Region support_region(const TestForm& xi) {
  double rs = xi.support_radius() * 1.02;
  if (xi.shape == TestForm::Shape::Ball) return Region::ball(xi.center, rs);
  std::array<double, kMaxDim> rr{};
  for (int j = 0; j < xi.n; ++j) rr[static_cast<std::size_t>(j)] = rs;
  return Region::polydisc(xi.center, rr);
}

MassReport pairing_trace(const std::vector<WedgeSlot>& slots, const WeightSpec& w,
                         const PshSpec& gauge, const GridDomain& grid, const CutoffSchedule& schedule,
                         const std::vector<double>& region_w) {
  MassReport rep;
  rep.ell = schedule.ell;
  rep.mass = grid_wedge_trace(grid, region_w, slots, w, &gauge, schedule.ell, 1);
  rep.flags.assign(schedule.ell.size(), "");
  rep.verdict = assess_convergence(rep.ell, rep.mass, rep.flags, &rep.extrapolation_method);
  return rep;
}

double trace_value(const MassReport& rep) {
  return rep.verdict.converged() ? rep.verdict.limit : rep.mass.back();
}

}  // namespace

BracketResult bracket_pairing(const PshSpec& u, int p, const TestForm& xi, const GridDomain& grid,
                              const CutoffSchedule& schedule, bool assume_gk) {
  if (xi.degree != p) throw std::invalid_argument("bracket_pairing: test form degree mismatch");
  if (!xi.supported_inside(grid)) throw std::invalid_argument("bracket_pairing: xi support touches boundary");
  schedule.validate();
  PshSpec gauge = schedule.gauge ? schedule.gauge : u;

  Region supp = support_region(xi);
  auto region_w = supp.weights(grid);
  if (!assume_gk && p >= 2) {
    // membership is local; the check runs on the support of xi
    GkVerdict gk = gk_membership(u, p - 1, grid, supp, schedule);
    if (!gk.member)
      throw std::runtime_error("bracket_pairing: u fails the G_{p-1} energy check; full/residual refused");
  }

  auto consts = power_matrices(xi);
  BracketResult out;

  {  // np: <<dd^c u>^p, xi>
    std::vector<WedgeSlot> slots;
    for (int i = 0; i < p; ++i) slots.push_back(WedgeSlot::of_spec(u));
    for (auto& mt : consts) slots.push_back(WedgeSlot::of_const(mt));
    MassReport t = pairing_trace(slots, WeightSpec::of_chi(xi), gauge, grid, schedule, region_w);
    out.np = {"np", p, trace_value(t), std::move(t)};
  }
  {  // full: int u <dd^c u>^{p-1} ^ dd^c xi
    std::vector<WedgeSlot> slots;
    for (int i = 0; i < p - 1; ++i) slots.push_back(WedgeSlot::of_spec(u));
    slots.push_back(WedgeSlot::of_chi(xi));
    for (auto& mt : consts) slots.push_back(WedgeSlot::of_const(mt));
    MassReport t = pairing_trace(slots, WeightSpec::of_spec(u), gauge, grid, schedule, region_w);
    out.full = {"full", p, trace_value(t), std::move(t)};
  }
  out.residual.current = "residual";
  out.residual.p = p;
  out.residual.value = out.full.value - out.np.value;  // S_p = [dd^c u]^p - <dd^c u>^p
  return out;
}

// --- regularization_sweep -------------------------------------------------------------

ConvergenceTrace regularization_sweep(const PshSpec& u, const PshSpec& v,
                                      const std::function<ChiFunction(double, double)>& chi_family, int p,
                                      const TestForm& xi, const GridDomain& grid,
                                      const CutoffSchedule& schedule, const CutoffSchedule& mask_schedule) {
  if (xi.degree != p) throw std::invalid_argument("regularization_sweep: xi degree mismatch");
  schedule.validate();
  ConvergenceTrace tr;
  auto consts = power_matrices(xi);

  double hmax = 0.0;
  for (int a = 0; a < grid.real_axes(); ++a) hmax = std::max(hmax, grid.step(a));

  std::vector<double> empty;
  for (std::size_t i = 0; i < schedule.ell.size(); ++i) {
    double ell = schedule.ell[i], delta = schedule.delta[i];
    ChiFunction chi = chi_family(ell, delta);
    PshSpec u_ell = regularize(u, v, chi);
    std::vector<WedgeSlot> slots;
    for (int q = 0; q < p; ++q) slots.push_back(WedgeSlot::of_spec(u_ell));
    for (auto& mt : consts) slots.push_back(WedgeSlot::of_const(mt));
    double val = grid_wedge_integral(grid, empty, slots, WeightSpec::of_chi(xi), nullptr, 0.0, 1);
    tr.ell.push_back(ell);
    tr.value.push_back(val);
    // Corner-layer resolution rule: delta below 4 grid steps near
    // {u = v - ell} leaves the corner unresolved on this grid.
    std::string flag;
    if (!chi.smooth() || delta < 4.0 * hmax) flag = "corner-unresolved";
    tr.flags.push_back(flag);
  }

  tr.verdict = assess_convergence(tr.ell, tr.value, tr.flags, nullptr);
  tr.extrapolated = tr.verdict.converged() ? tr.verdict.limit : tr.value.back();

  // Predicted limit: [dd^c u]^p + sum_{j<p} S_j(u) ^ (dd^c v)^{p-j}, each
  // term via bracket pairings with v's analytic Hessian filling the wedge.
  auto region_w = support_region(xi).weights(grid);
  BracketResult top = bracket_pairing(u, p, xi, grid, mask_schedule, true);
  tr.predicted_terms.push_back(top.full.value);
  double pred = top.full.value;
  for (int j = 1; j <= p - 1; ++j) {
    // pair S_j(u) against xi ^ (dd^c v)^{p-j}
    PshSpec gauge = mask_schedule.gauge ? mask_schedule.gauge : u;
    std::vector<WedgeSlot> base;
    for (int q = 0; q < j - 1; ++q) base.push_back(WedgeSlot::of_spec(u));
    base.push_back(WedgeSlot::of_chi(xi));
    for (int q = 0; q < p - j; ++q) base.push_back(WedgeSlot::of_spec(v));
    for (auto& mt : consts) base.push_back(WedgeSlot::of_const(mt));
    MassReport full_t = pairing_trace(base, WeightSpec::of_spec(u), gauge, grid, mask_schedule, region_w);

    std::vector<WedgeSlot> np_slots;
    for (int q = 0; q < j; ++q) np_slots.push_back(WedgeSlot::of_spec(u));
    for (int q = 0; q < p - j; ++q) np_slots.push_back(WedgeSlot::of_spec(v));
    for (auto& mt : consts) np_slots.push_back(WedgeSlot::of_const(mt));
    MassReport np_t = pairing_trace(np_slots, WeightSpec::of_chi(xi), gauge, grid, mask_schedule, region_w);

    double term = trace_value(full_t) - trace_value(np_t);
    tr.predicted_terms.push_back(term);
    pred += term;
  }
  tr.predicted = pred;
  tr.gap = std::abs(tr.extrapolated - tr.predicted);
  return tr;
}

// --- lelong_estimate --------------------------------------------------------------------

LelongEstimate lelong_estimate(const std::function<double(const TestForm&)>& pairing_provider, int n, int p,
                               const std::array<complexd, kMaxDim>& point, const std::vector<double>& radii,
                               double margin) {
  LelongEstimate est;
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] < radii[i - 1])) throw std::invalid_argument("lelong_estimate: radii must decrease");
  for (double r : radii) {
    TestForm lower = TestForm::ball_bump(n, p, point, r * (1.0 - margin), r);
    TestForm upper = TestForm::ball_bump(n, p, point, r, r * (1.0 + margin));
    double denom = std::pow(r, 2.0 * (n - p));
    est.radii.push_back(r);
    est.lower.push_back(pairing_provider(lower) / denom);
    est.upper.push_back(pairing_provider(upper) / denom);
  }
  double lo = est.lower.back(), hi = est.upper.back();
  est.value = 0.5 * (lo + hi);
  est.width = hi - lo;
  est.conclusive = est.width <= 0.25 * std::max(std::abs(est.value), 1e-12);
  return est;
}

// --- dynamit_identity_check --------------------------------------------------------------

BudgetedSumReport budgeted_sum(const std::vector<PshSpec>& terms, double budget_C, int k,
                               const GridDomain& grid, const Region& region,
                               const CutoffSchedule& schedule) {
  if (terms.empty()) throw std::invalid_argument("budgeted_sum: no terms");
  BudgetedSumReport out;

  // Energy vector of a partial sum: the |u|-weighted masses for j <= k.
  auto energies = [&](const PshSpec& u, bool* diverged) {
    std::vector<double> es;
    *diverged = false;
    NpMassOptions opts;
    opts.u_weight = true;
    opts.abs_weight = true;
    for (int j = 1; j <= k; ++j) {
      MassReport rep = np_product_mass(u, j, grid, region, schedule, opts);
      if (rep.verdict.diverging()) *diverged = true;
      es.push_back(rep.verdict.converged() ? rep.verdict.limit : rep.mass.back());
    }
    return es;
  };

  PshSpec current = terms[0];
  bool div0;
  std::vector<double> base = energies(current, &div0);
  if (div0) throw std::runtime_error("budgeted_sum: first term has divergent energy");
  out.coefficients.push_back(1.0);
  out.decrements.push_back(0.0);
  out.accepted.push_back(true);

  for (std::size_t i = 1; i < terms.size(); ++i) {
    double cap = budget_C / std::pow(2.0, static_cast<double>(i) + 1.0);
    if (budget_C <= 0.0) {
      out.coefficients.push_back(0.0);
      out.decrements.push_back(0.0);
      out.accepted.push_back(false);
      continue;
    }
    double b = 1.0;
    bool ok = false;
    double measured = 0.0;
    std::vector<double> next_base;
    for (int halvings = 0; halvings < 40; ++halvings, b *= 0.5) {
      PshSpec trial = psh_sum({1.0, b}, {current, terms[i]});
      bool div;
      std::vector<double> es = energies(trial, &div);
      if (div) continue;
      measured = 0.0;
      for (std::size_t j = 0; j < es.size(); ++j) measured = std::max(measured, std::abs(es[j] - base[j]));
      if (measured <= cap) {
        ok = true;
        next_base = es;
        break;
      }
    }
    if (!ok) {
      out.coefficients.push_back(0.0);
      out.decrements.push_back(measured);
      out.accepted.push_back(false);
      continue;
    }
    current = psh_sum({1.0, b}, {current, terms[i]});
    base = next_base;
    out.coefficients.push_back(b);
    out.decrements.push_back(measured);
    out.accepted.push_back(true);
  }
  out.sum = current;
  return out;
}

DynamitResult dynamit_identity_check(const PshSpec& u, const PshSpec& v, const std::vector<double>& ells,
                                     const TestForm& xi, const GridDomain& grid,
                                     const CutoffSchedule& mask_schedule, double corner_delta) {
  const int p = static_cast<int>(ells.size());
  if (p < 1 || p > grid.n) throw std::invalid_argument("dynamit_identity_check: need 1 <= p <= n");
  for (int i = 1; i < p; ++i)
    if (ells[static_cast<std::size_t>(i)] > ells[static_cast<std::size_t>(i - 1)])
      throw std::invalid_argument("dynamit_identity_check: need ell_1 >= ... >= ell_p");
  if (xi.degree != p) throw std::invalid_argument("dynamit_identity_check: xi degree mismatch");
  PshSpec gauge = mask_schedule.gauge ? mask_schedule.gauge : u;
  auto consts = power_matrices(xi);
  std::vector<double> empty;
  auto region_w = support_region(xi).weights(grid);

  std::vector<PshSpec> u_ell;
  for (double l : ells) u_ell.push_back(max_reg(u, v, l, corner_delta));

  DynamitResult out;
  {  // LHS: dd^c u_{l_p} ^ ... ^ dd^c u_{l_1} against xi
    std::vector<WedgeSlot> slots;
    for (auto& ul : u_ell) slots.push_back(WedgeSlot::of_spec(ul));
    for (auto& mt : consts) slots.push_back(WedgeSlot::of_const(mt));
    out.lhs = grid_wedge_integral(grid, empty, slots, WeightSpec::of_chi(xi), nullptr, 0.0, 1);
  }

  {  // term 0: dd^c u_{l_p} ^ <dd^c u>^{p-1}
    std::vector<WedgeSlot> slots;
    slots.push_back(WedgeSlot::of_spec(u_ell.back()));
    for (int q = 0; q < p - 1; ++q) slots.push_back(WedgeSlot::of_spec(u));
    for (auto& mt : consts) slots.push_back(WedgeSlot::of_const(mt));
    MassReport t = pairing_trace(slots, WeightSpec::of_chi(xi), gauge, grid, mask_schedule, region_w);
    out.rhs_terms.push_back(trace_value(t));
  }
  for (int j = 1; j <= p - 1; ++j) {
    // (dd^c u_{l_j} - <dd^c u>) ^ <dd^c u>^{j-1} ^ (dd^c v)^{p-j}
    std::vector<WedgeSlot> a, b;
    a.push_back(WedgeSlot::of_spec(u_ell[static_cast<std::size_t>(j - 1)]));
    for (int q = 0; q < j - 1; ++q) a.push_back(WedgeSlot::of_spec(u));
    for (int q = 0; q < p - j; ++q) a.push_back(WedgeSlot::of_spec(v));
    for (auto& mt : consts) a.push_back(WedgeSlot::of_const(mt));
    for (int q = 0; q < j; ++q) b.push_back(WedgeSlot::of_spec(u));
    for (int q = 0; q < p - j; ++q) b.push_back(WedgeSlot::of_spec(v));
    for (auto& mt : consts) b.push_back(WedgeSlot::of_const(mt));
    MassReport ta = pairing_trace(a, WeightSpec::of_chi(xi), gauge, grid, mask_schedule, region_w);
    MassReport tb = pairing_trace(b, WeightSpec::of_chi(xi), gauge, grid, mask_schedule, region_w);
    out.rhs_terms.push_back(trace_value(ta) - trace_value(tb));
  }
  out.rhs = 0.0;
  for (double t : out.rhs_terms) out.rhs += t;
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace nppl
