#include "nppl/kahler.hpp"

#include <cmath>
#include <random>

namespace nppl {

namespace {

constexpr double kRatioLow = 0.2;    // w_j = 0 where |x_j|^2/|x|^2 <= this
constexpr double kRatioHigh = 0.45;  // w_j = 1 above this
constexpr double kChartRadius = 2.4;  // grid half-width per real axis

// |f|^2 over the chart variables as a tuple.
PshSpec abs2_vars(int n) {
  std::vector<Poly> vars;
  for (int j = 0; j < n; ++j) vars.push_back(Poly::variable(n, j));
  return psh_abs2(PolyTuple(std::move(vars)));
}

// log(1 + |a|^2)
PshSpec fs_local_potential(int n) {
  return psh_log(psh_sum({1.0, 1.0}, {psh_const(n, 1.0), abs2_vars(n)}));
}

// Partition weight w_j read in chart i of P^n: an increasing C^4 step of the
// bounded ratio r_j = |x_j|^2 / |x|^2. The denominator 1 + |a|^2 never
// degenerates, so the transition shells stay resolvable on coarse grids.
// In chart i: r_i = 1/(1 + |a|^2); r_j = |a_j|^2/(1 + |a|^2) for j != i,
// where homogeneous index m != i sits at affine slot (m < i ? m : m - 1).
// Supp(w_i) in its own chart is {|a|^2 < 1/kRatioLow - 1}, radius 2 for
// kRatioLow = 0.2. Every point has max_j r_j >= 1/(n+1) > kRatioLow, so the
// weights cover.
PshSpec chart_weight(int n, int i, int j) {
  PshSpec denom_inv = psh_pow(psh_sum({1.0, 1.0}, {psh_const(n, 1.0), abs2_vars(n)}), -1.0);
  PshSpec ratio;
  if (i == j) {
    ratio = denom_inv;
  } else {
    int ja = j < i ? j : j - 1;  // affine slot of homogeneous coordinate j
    ratio = psh_prod(psh_abs2(PolyTuple({Poly::variable(n, ja)})), denom_inv);
  }
  // decreasing plateau cutoff flipped into an increasing step of the ratio
  PshSpec falling = psh_cutoff(ratio, std::sqrt(kRatioLow), std::sqrt(kRatioHigh));
  return psh_sum({1.0, -1.0}, {psh_const(n, 1.0), falling});
}

PshSpec chart_partition(int n, int i) {
  std::vector<double> coeffs;
  std::vector<PshSpec> ws;
  for (int j = 0; j <= n; ++j) {
    coeffs.push_back(1.0);
    ws.push_back(chart_weight(n, i, j));
  }
  PshSpec total = psh_sum(std::move(coeffs), std::move(ws));
  return psh_prod(chart_weight(n, i, i), psh_pow(total, -1.0));
}

double compute_M0(const KahlerManifold& m) {
  double total = 0.0;
  for (auto& ch : m.charts) {
    std::vector<WedgeSlot> slots;
    for (int q = 0; q < m.n; ++q) slots.push_back(WedgeSlot::of_spec(ch.h));
    std::vector<double> empty;
    total += grid_wedge_integral(ch.grid, empty, slots, WeightSpec::of_spec(ch.rho), nullptr, 0.0, 1);
  }
  return total;
}

}  // namespace

bool KahlerManifold::chart_coords(int chart, const std::vector<complexd>& homogeneous,
                                  std::array<complexd, kMaxDim>& out) const {
  out = {};
  if (kind == Kind::Projective) {
    int i = chart;
    complexd xi = homogeneous[static_cast<std::size_t>(i)];
    if (std::abs(xi) < 1e-12) return false;
    int t = 0;
    double maxr = 0.0;
    for (int mcoord = 0; mcoord <= n; ++mcoord) {
      if (mcoord == i) continue;
      out[static_cast<std::size_t>(t)] = homogeneous[static_cast<std::size_t>(mcoord)] / xi;
      maxr = std::max(maxr, std::abs(out[static_cast<std::size_t>(t)]));
      ++t;
    }
    return maxr <= kChartRadius;
  }
  // ProductP1P1: homogeneous = (x0, x1, y0, y1); chart = 2 i + j.
  int i = chart / 2, j = chart % 2;
  complexd xi = homogeneous[static_cast<std::size_t>(i)];
  complexd yj = homogeneous[static_cast<std::size_t>(2 + j)];
  if (std::abs(xi) < 1e-12 || std::abs(yj) < 1e-12) return false;
  out[0] = homogeneous[static_cast<std::size_t>(1 - i)] / xi;
  out[1] = homogeneous[static_cast<std::size_t>(2 + (1 - j))] / yj;
  return std::max(std::abs(out[0]), std::abs(out[1])) <= kChartRadius;
}

KahlerManifold build_projective(int n, int points_per_axis, double omega_scale) {
  if (n < 1 || n > 2) throw std::invalid_argument("build_projective: n in {1,2}");
  KahlerManifold m;
  m.kind = KahlerManifold::Kind::Projective;
  m.n = n;
  m.omega_scale = omega_scale;
  for (int i = 0; i <= n; ++i) {
    Chart ch;
    ch.grid = GridDomain::square(n, kChartRadius, points_per_axis);
    PshSpec h = fs_local_potential(n);
    ch.h = omega_scale == 1.0 ? h : psh_sum({omega_scale}, {h});
    ch.rho = chart_partition(n, i);
    m.charts.push_back(std::move(ch));
  }
  m.M0 = compute_M0(m);
  return m;
}

KahlerManifold build_product_p1xp1(int points_per_axis) {
  KahlerManifold m;
  m.kind = KahlerManifold::Kind::ProductP1P1;
  m.n = 2;
  m.omega_scale = 1.0;
  // 1-variable building blocks remapped into the two slots
  PshSpec h1 = fs_local_potential(1);
  std::array<PshSpec, 2> rho1 = {chart_partition(1, 0), chart_partition(1, 1)};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Chart ch;
      ch.grid = GridDomain::square(2, kChartRadius, points_per_axis);
      PshSpec ha = psh_remap_vars(h1, 2, {0, -1, -1});
      PshSpec hb = psh_remap_vars(h1, 2, {-1, 0, -1});
      ch.h = psh_sum({1.0, 1.0}, {ha, hb});
      PshSpec ra = psh_remap_vars(rho1[static_cast<std::size_t>(i)], 2, {0, -1, -1});
      PshSpec rb = psh_remap_vars(rho1[static_cast<std::size_t>(j)], 2, {-1, 0, -1});
      ch.rho = psh_prod(ra, rb);
      m.charts.push_back(std::move(ch));
    }
  m.M0 = compute_M0(m);
  return m;
}

// --- global function catalog ------------------------------------------------------

OmegaPshSpec omega_constant(double c) {
  OmegaPshSpec s;
  s.name = "const";
  s.bounded = true;
  s.chart_phi = [c](const KahlerManifold& m, int) { return psh_const(m.n, c); };
  return s;
}

namespace {
PshSpec fs_chart_phi(const KahlerManifold& m, int chart, const std::vector<Poly>& F, double lambda) {
  std::vector<Poly> Fi;
  for (auto& p : F) Fi.push_back(p.dehomogenize(chart));
  PshSpec logF = psh_log(psh_abs2(PolyTuple(std::move(Fi))));
  return psh_sum({1.0, -lambda}, {logF, fs_local_potential(m.n)});
}
}  // namespace

OmegaPshSpec fs_potential(std::vector<Poly> F, double lambda, std::string name) {
  OmegaPshSpec s;
  s.name = std::move(name);
  s.bounded = false;
  s.chart_phi = [F = std::move(F), lambda](const KahlerManifold& m, int chart) {
    return fs_chart_phi(m, chart, F, lambda);
  };
  return s;
}

OmegaPshSpec powerlog_fs(std::vector<Poly> F, double lambda, double eps, double C, std::string name) {
  OmegaPshSpec s;
  s.name = std::move(name);
  s.bounded = false;
  auto Fv = std::move(F);
  s.chart_phi = [Fv, lambda, eps, C](const KahlerManifold& m, int chart) {
    PshSpec phi = fs_chart_phi(m, chart, Fv, lambda);
    PshSpec shifted = psh_sum({1.0, 1.0}, {phi, psh_const(m.n, -C)});
    return psh_negpow(shifted, eps);
  };
  s.chart_gauge = [Fv, lambda, C](const KahlerManifold& m, int chart) {
    return psh_sum({1.0, 1.0}, {fs_chart_phi(m, chart, Fv, lambda), psh_const(m.n, -C)});
  };
  return s;
}

OmegaPshSpec convex_combination(const OmegaPshSpec& a, const OmegaPshSpec& b, double t) {
  OmegaPshSpec s;
  s.name = a.name + "+" + b.name;
  s.bounded = a.bounded && b.bounded;
  auto fa = a.chart_phi, fb = b.chart_phi;
  s.chart_phi = [fa, fb, t](const KahlerManifold& m, int chart) {
    return psh_sum({1.0 - t, t}, {fa(m, chart), fb(m, chart)});
  };
  if (b.chart_gauge) s.chart_gauge = b.chart_gauge;
  if (a.chart_gauge) s.chart_gauge = a.chart_gauge;
  return s;
}

OmegaPshSpec truncated_max_family(const std::vector<complexd>& a, const std::vector<double>& c,
                                  const std::vector<double>& b, double delta) {
  if (a.size() != c.size() || a.size() != b.size() || a.empty())
    throw std::invalid_argument("truncated_max_family: arity mismatch");
  OmegaPshSpec s;
  s.name = "kyckling";
  s.bounded = true;  // every term is cut at -c_i
  auto av = a;
  auto cv = c;
  auto bv = b;
  s.chart_phi = [av, cv, bv, delta](const KahlerManifold& m, int chart) {
    if (m.n != 1) throw std::invalid_argument("truncated_max_family: P^1 only");
    std::vector<std::pair<double, PshSpec>> terms;
    for (std::size_t i = 0; i < av.size(); ++i) {
      // x1 - a_i x0 read in this chart
      Poly p(2);
      p.add_term({0, 1, 0, 0}, 1.0);
      p.add_term({1, 0, 0, 0}, -av[i]);
      Poly pc = p.dehomogenize(chart);
      PshSpec term = psh_sum({1.0, -1.0}, {psh_log(psh_abs2(PolyTuple({pc}))), fs_local_potential(1)});
      PshSpec cut = psh_const(1, -cv[i]);
      terms.emplace_back(bv[i], delta > 0 ? psh_smax(term, cut, delta) : psh_max(term, cut));
    }
    return weighted_sum(terms);
  };
  return s;
}

OmegaPshSpec product_lift(const OmegaPshSpec& phi1, const OmegaPshSpec& phi2) {
  OmegaPshSpec s;
  s.name = "prod(" + phi1.name + "," + phi2.name + ")";
  s.bounded = phi1.bounded && phi2.bounded;
  auto f1 = phi1.chart_phi, f2 = phi2.chart_phi;
  s.chart_phi = [f1, f2](const KahlerManifold& m, int chart) {
    if (m.kind != KahlerManifold::Kind::ProductP1P1)
      throw std::invalid_argument("product_lift: needs the P1 x P1 manifold");
    // Factor specs are built against an ephemeral P^1 view of the factor.
    KahlerManifold p1;
    p1.kind = KahlerManifold::Kind::Projective;
    p1.n = 1;
    int i = chart / 2, j = chart % 2;
    PshSpec a = psh_remap_vars(f1(p1, i), 2, {0, -1, -1});
    PshSpec b = psh_remap_vars(f2(p1, j), 2, {-1, 0, -1});
    return psh_sum({1.0, 1.0}, {a, b});
  };
  return s;
}

OmegaPshSpec join_lift_p1_point(const OmegaPshSpec& phi1, const std::vector<Poly>& F1, double kappa,
                                double t) {
  OmegaPshSpec s;
  s.name = "join(" + phi1.name + ",pt)";
  s.bounded = false;
  auto f1 = phi1.chart_phi;
  auto F = F1;
  s.chart_phi = [f1, F, kappa, t](const KahlerManifold& m, int chart) {
    if (m.n != 2 || m.kind != KahlerManifold::Kind::Projective)
      throw std::invalid_argument("join_lift_p1_point: needs P^2");
    // Homogeneous coordinates [x0, x1, y]; phi~1 = p1^* phi1 + Gamma_x - Gamma_{x,y},
    // phi~2 = kappa + Gamma_y - Gamma_{x,y}; return (1-t) phi~1 + t phi~2.
    KahlerManifold p1;
    p1.kind = KahlerManifold::Kind::Projective;
    p1.n = 1;
    PshSpec h2 = fs_local_potential(2);
    PshSpec tilde1, tilde2;
    if (chart == 0 || chart == 1) {
      // coords (a, b) = (x_{1-chart}/x_chart, y/x_chart)
      PshSpec base = psh_remap_vars(f1(p1, chart), 2, {0, -1, -1});
      PshSpec gx = psh_remap_vars(fs_local_potential(1), 2, {0, -1, -1});  // log(1+|a|^2)
      tilde1 = psh_sum({1.0, 1.0, -1.0}, {base, gx, h2});
      // Gamma_y - Gamma_{x,y} = log(|b|^2 / (1+|a|^2+|b|^2))
      PshSpec logb = psh_log(psh_abs2(PolyTuple({Poly::variable(2, 1)})));
      tilde2 = psh_sum({1.0, 1.0, -1.0}, {psh_const(2, kappa), logb, h2});
    } else {
      // chart 2: coords (e, f) = (x0/y, x1/y); p1^* phi1 + Gamma_x read directly
      // as log |F(e,f)|^2 for the degree-1 tuple F defining phi1.
      std::vector<Poly> F2;
      for (auto& p : F) {
        Poly q(2);
        for (auto& [e, cfc] : p.terms) {
          std::array<int, kMaxVars> e2{};
          e2[0] = e[0];
          e2[1] = e[1];
          q.add_term(e2, cfc);
        }
        F2.push_back(q);
      }
      tilde1 = psh_sum({1.0, -1.0}, {psh_log(psh_abs2(PolyTuple(std::move(F2)))), h2});
      tilde2 = psh_sum({1.0, -1.0}, {psh_const(2, kappa), h2});
    }
    return psh_sum({1.0 - t, t}, {tilde1, tilde2});
  };
  return s;
}

// --- global integrals ----------------------------------------------------------------

namespace {

struct ChartData {
  PshSpec phi, u, rho, weight_phi_rho, gauge;
};

std::vector<ChartData> instantiate(const KahlerManifold& m, const OmegaPshSpec& phi) {
  std::vector<ChartData> out;
  for (int i = 0; i < static_cast<int>(m.charts.size()); ++i) {
    ChartData d;
    d.phi = phi.chart_phi(m, i);
    d.u = psh_sum({1.0, 1.0}, {d.phi, m.charts[static_cast<std::size_t>(i)].h});
    d.rho = m.charts[static_cast<std::size_t>(i)].rho;
    d.weight_phi_rho = psh_prod(d.rho, d.phi);
    d.gauge = phi.chart_gauge ? phi.chart_gauge(m, i) : d.phi;
    out.push_back(std::move(d));
  }
  return out;
}

// sum_i int rho_i * density(u_i^j ^ h^{n-j}) over {phi > -ell}, one grid
// pass per chart for the whole schedule
std::vector<double> np_masses(const KahlerManifold& m, const std::vector<ChartData>& cd, int j,
                              const std::vector<double>& ells, bool phi_weight) {
  std::vector<double> total(ells.size(), 0.0);
  std::vector<double> empty;
  for (std::size_t i = 0; i < m.charts.size(); ++i) {
    const Chart& ch = m.charts[i];
    std::vector<WedgeSlot> slots;
    for (int q = 0; q < j; ++q) slots.push_back(WedgeSlot::of_spec(cd[i].u));
    for (int q = j; q < m.n; ++q) slots.push_back(WedgeSlot::of_spec(ch.h));
    WeightSpec w = phi_weight ? WeightSpec::of_spec(cd[i].weight_phi_rho) : WeightSpec::of_spec(cd[i].rho);
    std::vector<double> tr = grid_wedge_trace(ch.grid, empty, slots, w, &cd[i].gauge, ells, 1);
    for (std::size_t t = 0; t < ells.size(); ++t) total[t] += tr[t];
  }
  return total;
}

// sum_i int u_i * density(u_i^{j-1} ^ dd^c rho_i ^ h^{n-j}) over {phi > -ell}
std::vector<double> full_masses(const KahlerManifold& m, const std::vector<ChartData>& cd, int j,
                                const std::vector<double>& ells) {
  std::vector<double> total(ells.size(), 0.0);
  std::vector<double> empty;
  for (std::size_t i = 0; i < m.charts.size(); ++i) {
    const Chart& ch = m.charts[i];
    std::vector<WedgeSlot> slots;
    for (int q = 0; q < j - 1; ++q) slots.push_back(WedgeSlot::of_spec(cd[i].u));
    slots.push_back(WedgeSlot::of_spec(cd[i].rho));
    for (int q = j; q < m.n; ++q) slots.push_back(WedgeSlot::of_spec(ch.h));
    std::vector<double> tr =
        grid_wedge_trace(ch.grid, empty, slots, WeightSpec::of_spec(cd[i].u), &cd[i].gauge, ells, 1);
    for (std::size_t t = 0; t < ells.size(); ++t) total[t] += tr[t];
  }
  return total;
}

MassReport masses_report(const std::vector<double>& ells, std::vector<double> masses) {
  MassReport rep;
  rep.ell = ells;
  rep.mass = std::move(masses);
  rep.flags.assign(ells.size(), "");
  rep.verdict = assess_convergence(rep.ell, rep.mass, rep.flags, &rep.extrapolation_method);
  return rep;
}

double report_limit(const MassReport& rep) {
  return rep.verdict.converged() ? rep.verdict.limit : rep.mass.back();
}

}  // namespace

GlobalMassReport global_mass_report(const KahlerManifold& m, const OmegaPshSpec& phi, int p,
                                    const CutoffSchedule& schedule) {
  if (p < 1 || p > m.n) throw std::invalid_argument("global_mass_report: p out of range");
  schedule.validate();
  auto cd = instantiate(m, phi);
  GlobalMassReport out;
  out.p = p;
  out.np = masses_report(schedule.ell, np_masses(m, cd, p, schedule.ell, false));
  out.np_limit = report_limit(out.np);
  double acc = out.np_limit;
  for (int j = 1; j <= p; ++j) {
    MassReport fj = masses_report(schedule.ell, full_masses(m, cd, j, schedule.ell));
    MassReport nj = j == p ? out.np : masses_report(schedule.ell, np_masses(m, cd, j, schedule.ell, false));
    if (!fj.verdict.converged() || !nj.verdict.converged()) out.flags.push_back("S_" + std::to_string(j) + ": trace not converged");
    double sj = report_limit(fj) - report_limit(nj);
    out.sj_full.push_back(report_limit(fj));
    out.sj.push_back(sj);
    acc += sj;
  }
  out.residual = acc - m.M0;
  return out;
}

EnergyResult energy(const KahlerManifold& m, const OmegaPshSpec& phi, int k, EnergyMode mode,
                    const CutoffSchedule& schedule, const OmegaPshSpec* psi) {
  if (k < 0 || k > m.n) throw std::invalid_argument("energy: k out of range");
  schedule.validate();

  if (mode == EnergyMode::Relative) {
    if (!psi) throw std::invalid_argument("energy: relative mode needs psi");
    // E_k^psi(phi) = lim_l E_k^np(max(phi, psi - l))   [the enkelt route]
    EnergyResult out;
    for (double L : schedule.ell) {
      OmegaPshSpec phiL;
      phiL.name = phi.name + "|rel";
      auto fphi = phi.chart_phi;
      auto fpsi = psi->chart_phi;
      phiL.chart_phi = [fphi, fpsi, L](const KahlerManifold& mm, int chart) {
        return psh_max(fphi(mm, chart),
                       psh_sum({1.0, 1.0}, {fpsi(mm, chart), psh_const(mm.n, -L)}));
      };
      EnergyResult inner = energy(m, phiL, k, EnergyMode::Np, schedule, nullptr);
      out.ell.push_back(L);
      out.corrected.push_back(inner.value);
      out.raw.push_back(inner.value);
    }
    std::vector<std::string> flags(out.ell.size(), "");
    out.verdict = assess_convergence(out.ell, out.corrected, flags, nullptr);
    out.finite = out.verdict.converged();
    out.value = out.finite ? out.verdict.limit : out.corrected.back();
    return out;
  }

  auto cd = instantiate(m, phi);
  std::vector<MassReport> np_traces, wnp_traces;
  for (int j = 0; j <= k; ++j) {
    np_traces.push_back(masses_report(schedule.ell, np_masses(m, cd, j, schedule.ell, false)));
    wnp_traces.push_back(masses_report(schedule.ell, np_masses(m, cd, j, schedule.ell, true)));
  }

  EnergyResult out;
  double T = 0.0;
  bool wnp_ok = true;
  double enp = 0.0;
  for (int j = 0; j <= k; ++j) {
    T += m.M0 - report_limit(np_traces[static_cast<std::size_t>(j)]);
    wnp_ok = wnp_ok && wnp_traces[static_cast<std::size_t>(j)].verdict.converged();
    enp += report_limit(wnp_traces[static_cast<std::size_t>(j)]);
  }
  enp /= (k + 1);
  out.mass_deficiency = T;

  if (mode == EnergyMode::Np) {
    out.finite = wnp_ok;
    out.value = enp;
    out.verdict = wnp_traces.back().verdict;
    for (std::size_t i = 0; i < schedule.ell.size(); ++i) {
      out.ell.push_back(schedule.ell[i]);
      double s = 0.0;
      for (int j = 0; j <= k; ++j) s += wnp_traces[static_cast<std::size_t>(j)].mass[i];
      out.corrected.push_back(s / (k + 1));
      out.raw.push_back(s / (k + 1));
    }
    return out;
  }

  // Classical mode via the plurifine-local identity:
  //   E_k(max(phi,-l)) = (1/(k+1)) sum_j [ wnp_j(l) - l (M0 - np_j(l)) ],
  // corrected track adds (l/(k+1)) sum_j (M0 - np_j^inf).
  for (std::size_t i = 0; i < schedule.ell.size(); ++i) {
    double ell = schedule.ell[i];
    double raw = 0.0, corr = 0.0;
    for (int j = 0; j <= k; ++j) {
      double npj = np_traces[static_cast<std::size_t>(j)].mass[i];
      double wnpj = wnp_traces[static_cast<std::size_t>(j)].mass[i];
      double npj_inf = report_limit(np_traces[static_cast<std::size_t>(j)]);
      raw += wnpj - ell * (m.M0 - npj);
      corr += wnpj - ell * (npj_inf - npj);
    }
    out.ell.push_back(ell);
    out.raw.push_back(raw / (k + 1));
    out.corrected.push_back(corr / (k + 1));
  }
  std::vector<std::string> flags(out.ell.size(), "");
  out.verdict = assess_convergence(out.ell, out.corrected, flags, nullptr);
  bool full_mass = std::abs(T) <= 0.02 * m.M0 * (k + 1);
  out.finite = full_mass && wnp_ok;
  out.value = out.finite ? enp : -std::numeric_limits<double>::infinity();
  return out;
}

double energy_bounded_direct(const KahlerManifold& m, const OmegaPshSpec& phi, int k) {
  auto cd = instantiate(m, phi);
  std::vector<double> empty;
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    for (std::size_t i = 0; i < m.charts.size(); ++i) {
      const Chart& ch = m.charts[i];
      std::vector<WedgeSlot> slots;
      for (int q = 0; q < j; ++q) slots.push_back(WedgeSlot::of_spec(cd[i].u));
      for (int q = j; q < m.n; ++q) slots.push_back(WedgeSlot::of_spec(ch.h));
      acc += grid_wedge_integral(ch.grid, empty, slots, WeightSpec::of_spec(cd[i].weight_phi_rho), nullptr,
                                 0.0, 1);
    }
  }
  return acc / (k + 1);
}

ClassFlags class_flags(const KahlerManifold& m, const OmegaPshSpec& phi, int k,
                       const CutoffSchedule& schedule) {
  ClassFlags out;
  out.M0 = m.M0;
  auto cd = instantiate(m, phi);
  MassReport npk = masses_report(schedule.ell, np_masses(m, cd, k, schedule.ell, false));
  out.np_k_mass = report_limit(npk);
  out.in_fk = std::abs(out.np_k_mass - m.M0) <= 0.02 * m.M0;

  EnergyResult enp = energy(m, phi, k, EnergyMode::Np, schedule, nullptr);
  out.in_gk = enp.finite;

  EnergyResult ecl = energy(m, phi, k, EnergyMode::Classical, schedule, nullptr);
  out.in_ek_direct = ecl.finite;
  out.in_ek_via = out.in_gk && out.in_fk;
  out.consistent = out.in_ek_direct == out.in_ek_via;
  return out;
}

DerivativeCheck energy_derivative_check(const KahlerManifold& m, const OmegaPshSpec& phi,
                                        const OmegaPshSpec& u, int k, double step) {
  DerivativeCheck out;
  auto at = [&](double t) {
    OmegaPshSpec phit = convex_combination(phi, u, 0.0);  // placeholder, rebuilt below
    auto fphi = phi.chart_phi;
    auto fu = u.chart_phi;
    phit.chart_phi = [fphi, fu, t](const KahlerManifold& mm, int chart) {
      return psh_sum({1.0, t}, {fphi(mm, chart), fu(mm, chart)});
    };
    phit.bounded = true;
    return energy_bounded_direct(m, phit, k);
  };
  double e0 = at(0.0), ep = at(step), em = at(-step);
  out.fd1 = (ep - em) / (2 * step);
  out.fd2 = (ep - 2 * e0 + em) / (step * step);

  auto cd = instantiate(m, phi);
  std::vector<double> empty;
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < m.charts.size(); ++i) {
    const Chart& ch = m.charts[i];
    PshSpec ui_dir = u.chart_phi(m, static_cast<int>(i));
    {
      std::vector<WedgeSlot> slots;
      for (int q = 0; q < k; ++q) slots.push_back(WedgeSlot::of_spec(cd[i].u));
      for (int q = k; q < m.n; ++q) slots.push_back(WedgeSlot::of_spec(ch.h));
      d1 += grid_wedge_integral(ch.grid, empty, slots, WeightSpec::of_spec(psh_prod(cd[i].rho, ui_dir)),
                                nullptr, 0.0, 1);
    }
    if (k >= 1) {
      std::vector<WedgeSlot> slots;
      slots.push_back(WedgeSlot::of_grad_outer(ui_dir));
      for (int q = 0; q < k - 1; ++q) slots.push_back(WedgeSlot::of_spec(cd[i].u));
      for (int q = k; q < m.n; ++q) slots.push_back(WedgeSlot::of_spec(ch.h));
      d2 += grid_wedge_integral(ch.grid, empty, slots, WeightSpec::of_spec(cd[i].rho), nullptr, 0.0, 1);
    }
  }
  out.closed1 = d1;
  out.closed2 = -k * d2;
  out.rel1 = std::abs(out.fd1 - out.closed1) / std::max(1e-12, std::abs(out.closed1));
  out.rel2 = std::abs(out.fd2 - out.closed2) / std::max(1e-12, std::abs(out.closed2));
  return out;
}

double partition_sum_defect(const KahlerManifold& m, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const int hcount = m.kind == KahlerManifold::Kind::Projective ? m.n + 1 : 4;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<complexd> x(static_cast<std::size_t>(hcount));
    for (auto& v : x) v = complexd(g(rng), g(rng));
    double total = 0.0;
    bool covered = false;
    for (int i = 0; i < static_cast<int>(m.charts.size()); ++i) {
      std::array<complexd, kMaxDim> a{};
      if (!m.chart_coords(i, x, a)) continue;
      covered = true;
      total += evaluate(m.charts[static_cast<std::size_t>(i)].rho, a);
    }
    if (covered) worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

double chart_overlap_defect(const KahlerManifold& m, const OmegaPshSpec& phi, int samples,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const int hcount = m.kind == KahlerManifold::Kind::Projective ? m.n + 1 : 4;
  auto cd = instantiate(m, phi);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<complexd> x(static_cast<std::size_t>(hcount));
    for (auto& v : x) v = complexd(g(rng), g(rng));
    double lo = 1e308, hi = -1e308;
    for (int i = 0; i < static_cast<int>(m.charts.size()); ++i) {
      std::array<complexd, kMaxDim> a{};
      if (!m.chart_coords(i, x, a)) continue;
      double v = evaluate(cd[static_cast<std::size_t>(i)].phi, a);
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi > -1e307 && lo < 1e307) worst = std::max(worst, hi - lo);
  }
  return worst;
}

}  // namespace nppl
