#include "nppl/psh.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "nppl/bump.hpp"

namespace nppl {

using nlohmann::json;

namespace {

PshSpec make_node(PshNode&& n) { return std::make_shared<const PshNode>(std::move(n)); }

double chi_at_minus_inf(const ChiFunction& c) {
  switch (c.kind) {
    case ChiFunction::Kind::HardMax:
    case ChiFunction::Kind::SmoothMax:
      return -c.ell;
    case ChiFunction::Kind::LogExp:
      return std::log(c.eps);
  }
  return 0;
}

// |f|^2 jet: value = sum |f_m|^2, g_j = sum f'_mj conj(f_m),
// H_jk = sum f'_mj conj(f'_mk).
Jet2 abs2_jet(const PolyTuple& f, const std::array<complexd, kMaxDim>& z, int n) {
  Jet2 r = Jet2::constant(n, 0.0);
  for (std::size_t m = 0; m < f.size(); ++m) {
    complexd v = f.f[m].eval(z.data());
    r.v += std::norm(v);
    std::array<complexd, kMaxDim> dv{};
    for (int j = 0; j < n; ++j) {
      dv[static_cast<std::size_t>(j)] = f.df[m][static_cast<std::size_t>(j)].eval(z.data());
      r.g[static_cast<std::size_t>(j)] += dv[static_cast<std::size_t>(j)] * std::conj(v);
    }
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r.h.at(j, k) += dv[static_cast<std::size_t>(j)] * std::conj(dv[static_cast<std::size_t>(k)]);
  }
  return r;
}

double abs2_value(const PolyTuple& f, const std::array<complexd, kMaxDim>& z) {
  double v = 0.0;
  for (auto& p : f.f) v += std::norm(p.eval(z.data()));
  return v;
}

}  // namespace

// --- constructors -----------------------------------------------------------

PshSpec psh_const(int n, double c) {
  PshNode node;
  node.kind = PshNode::Kind::Const;
  node.n = n;
  node.a = c;
  return make_node(std::move(node));
}

PshSpec psh_abs2(PolyTuple f) {
  PshNode node;
  node.kind = PshNode::Kind::Abs2;
  node.n = f.nvars;
  node.polys = std::move(f);
  return make_node(std::move(node));
}

PshSpec psh_log(PshSpec child) {
  PshNode node;
  node.kind = PshNode::Kind::Log;
  node.n = child->n;
  node.kids = {std::move(child)};
  return make_node(std::move(node));
}

PshSpec psh_pow(PshSpec child, double a) {
  PshNode node;
  node.kind = PshNode::Kind::Pow;
  node.n = child->n;
  node.a = a;
  node.kids = {std::move(child)};
  return make_node(std::move(node));
}

PshSpec psh_sum(std::vector<double> coeffs, std::vector<PshSpec> kids) {
  if (coeffs.size() != kids.size() || kids.empty()) throw std::invalid_argument("psh_sum: arity mismatch");
  PshNode node;
  node.kind = PshNode::Kind::Sum;
  node.n = kids[0]->n;
  for (auto& k : kids)
    if (k->n != node.n) throw std::invalid_argument("psh_sum: dimension mismatch");
  node.coeffs = std::move(coeffs);
  node.kids = std::move(kids);
  return make_node(std::move(node));
}

PshSpec psh_negpow(PshSpec child, double eps) {
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("psh_negpow: eps outside (0,1)");
  PshNode node;
  node.kind = PshNode::Kind::NegPow;
  node.n = child->n;
  node.a = eps;
  node.kids = {std::move(child)};
  return make_node(std::move(node));
}

PshSpec psh_prod(PshSpec a, PshSpec b) {
  PshNode node;
  node.kind = PshNode::Kind::Prod;
  node.n = a->n;
  node.kids = {std::move(a), std::move(b)};
  return make_node(std::move(node));
}

PshSpec psh_max(PshSpec a, PshSpec b) {
  PshNode node;
  node.kind = PshNode::Kind::Max;
  node.n = a->n;
  node.kids = {std::move(a), std::move(b)};
  return make_node(std::move(node));
}

PshSpec psh_smax(PshSpec a, PshSpec b, double delta) {
  PshNode node;
  node.kind = PshNode::Kind::SMax;
  node.n = a->n;
  node.delta = delta;
  node.kids = {std::move(a), std::move(b)};
  return make_node(std::move(node));
}

PshSpec psh_toric(std::shared_ptr<const ToricEval> f, int n) {
  if (f->dim() != n) throw std::invalid_argument("psh_toric: dimension mismatch");
  PshNode node;
  node.kind = PshNode::Kind::Toric;
  node.n = n;
  node.toric = std::move(f);
  return make_node(std::move(node));
}

PshSpec psh_cutoff(PshSpec child, double plateau, double support) {
  if (!(support > plateau) || !(plateau > 0)) throw std::invalid_argument("psh_cutoff: need 0 < plateau < support");
  PshNode node;
  node.kind = PshNode::Kind::Cutoff;
  node.n = child->n;
  node.a = plateau * plateau;
  node.delta = support * support;
  node.kids = {std::move(child)};
  return make_node(std::move(node));
}

PshSpec psh_remap_vars(const PshSpec& s, int new_n, const std::array<int, kMaxDim>& perm) {
  auto remap_poly = [&](const Poly& p) {
    Poly q(new_n);
    for (auto& [e, c] : p.terms) {
      std::array<int, kMaxVars> e2{};
      for (int j = 0; j < p.nvars; ++j) {
        if (e[static_cast<std::size_t>(j)] == 0) continue;
        // find where old var j lands
        int target = -1;
        for (int t = 0; t < new_n; ++t)
          if (perm[static_cast<std::size_t>(t)] == j) target = t;
        if (target < 0) throw std::invalid_argument("psh_remap_vars: variable dropped");
        e2[static_cast<std::size_t>(target)] = e[static_cast<std::size_t>(j)];
      }
      q.add_term(e2, c);
    }
    return q;
  };
  auto remap_tuple = [&](const PolyTuple& f) {
    std::vector<Poly> polys;
    for (auto& p : f.f) polys.push_back(remap_poly(p));
    return PolyTuple(std::move(polys));
  };
  PshNode node = *s;
  node.n = new_n;
  switch (s->kind) {
    case PshNode::Kind::Abs2:
    case PshNode::Kind::PowerLog:
      node.polys = remap_tuple(s->polys);
      break;
    case PshNode::Kind::SupStar:
    case PshNode::Kind::Toric:
      throw std::invalid_argument("psh_remap_vars: unsupported node kind");
    default:
      break;
  }
  for (auto& k : node.kids) k = psh_remap_vars(k, new_n, perm);
  return make_node(std::move(node));
}

PshSpec log_norm(double c, PolyTuple f, PshSpec b) {
  if (!(c > 0)) throw std::invalid_argument("log_norm: c must be positive");
  PshSpec lg = psh_log(psh_abs2(std::move(f)));
  if (!b) return c == 1.0 ? lg : psh_sum({c}, {lg});
  return psh_sum({c, 1.0}, {lg, std::move(b)});
}

PshSpec power_log(double eps, PolyTuple f) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("power_log: eps outside (0,1)");
  PshNode node;
  node.kind = PshNode::Kind::PowerLog;
  node.n = f.nvars;
  node.a = eps;
  node.polys = std::move(f);
  return make_node(std::move(node));
}

PshSpec regularize(PshSpec u, PshSpec v, const ChiFunction& chi) {
  if (u->n != v->n) throw std::invalid_argument("regularize: dimension mismatch");
  if (chi.kind == ChiFunction::Kind::HardMax) {
    // chi_ell o (u - v) + v = max(u, v - ell)
    return psh_max(u, psh_sum({1.0, 1.0}, {v, psh_const(v->n, -chi.ell)}));
  }
  PshNode node;
  node.kind = PshNode::Kind::ChiComp;
  node.n = u->n;
  node.chi = chi;
  node.kids = {std::move(u), std::move(v)};
  return make_node(std::move(node));
}

PshSpec max_reg(PshSpec u, PshSpec v, double ell, double delta) {
  PshSpec shifted = psh_sum({1.0, 1.0}, {v, psh_const(v->n, -ell)});
  if (delta <= 0.0) return psh_max(std::move(u), std::move(shifted));
  return psh_smax(std::move(u), std::move(shifted), delta);
}

PshSpec weighted_sum(const std::vector<std::pair<double, PshSpec>>& terms) {
  std::vector<double> c;
  std::vector<PshSpec> k;
  for (auto& [b, s] : terms) {
    if (!(b > 0)) throw std::invalid_argument("weighted_sum: coefficients must be positive");
    c.push_back(b);
    k.push_back(s);
  }
  return psh_sum(std::move(c), std::move(k));
}

PshSpec supstar(SupStarData data) {
  if (data.branches.empty()) throw std::invalid_argument("supstar: no branches");
  PshNode node;
  node.kind = PshNode::Kind::SupStar;
  node.n = 2;
  node.supstar = std::move(data);
  return make_node(std::move(node));
}

// --- evaluation --------------------------------------------------------------

double evaluate(const PshSpec& s, const std::array<complexd, kMaxDim>& z) {
  switch (s->kind) {
    case PshNode::Kind::Const:
      return s->a;
    case PshNode::Kind::Abs2:
      return abs2_value(s->polys, z);
    case PshNode::Kind::Log: {
      double v = evaluate(s->kids[0], z);
      if (!std::isfinite(v) || v <= 0.0) return kBottom;
      return std::log(v);
    }
    case PshNode::Kind::Pow: {
      double v = evaluate(s->kids[0], z);
      if (!std::isfinite(v)) return kBottom;
      return std::pow(std::max(v, 0.0), s->a);
    }
    case PshNode::Kind::PowerLog: {
      double f2 = abs2_value(s->polys, z);
      if (f2 <= 0.0) return kBottom;
      if (f2 >= 1.0) throw std::domain_error("PowerLog evaluated outside {|f|^2 < 1}");
      return -std::pow(-std::log(f2), s->a);
    }
    case PshNode::Kind::NegPow: {
      double v = evaluate(s->kids[0], z);
      if (!std::isfinite(v)) return kBottom;
      if (v >= 0.0) throw std::domain_error("NegPow evaluated outside {child < 0}");
      return -std::pow(-v, s->a);
    }
    case PshNode::Kind::Sum: {
      double acc = 0.0;
      for (std::size_t i = 0; i < s->kids.size(); ++i) {
        double v = evaluate(s->kids[i], z);
        if (!std::isfinite(v)) return kBottom;
        acc += s->coeffs[i] * v;
      }
      return acc;
    }
    case PshNode::Kind::Prod: {
      double a = evaluate(s->kids[0], z), b = evaluate(s->kids[1], z);
      if (!std::isfinite(a) || !std::isfinite(b)) return kBottom;
      return a * b;
    }
    case PshNode::Kind::Max: {
      double a = evaluate(s->kids[0], z), b = evaluate(s->kids[1], z);
      return std::max(a, b);  // max(-inf, x) = x
    }
    case PshNode::Kind::SMax: {
      double a = evaluate(s->kids[0], z), b = evaluate(s->kids[1], z);
      if (!std::isfinite(a)) return b;
      if (!std::isfinite(b)) return a;
      double d = a - b;
      return 0.5 * (a + b + std::sqrt(d * d + s->delta * s->delta));
    }
    case PshNode::Kind::ChiComp: {
      double u = evaluate(s->kids[0], z), v = evaluate(s->kids[1], z);
      if (!std::isfinite(v)) return kBottom;  // v must be smooth
      if (!std::isfinite(u)) return chi_at_minus_inf(*s->chi) + v;
      return s->chi->value(u - v) + v;
    }
    case PshNode::Kind::SupStar: {
      double t1 = (z[0] == complexd(0.0)) ? kBottom : std::log(std::norm(z[0]));
      if (!std::isfinite(t1)) return kBottom;
      double x = std::norm(z[1]);
      double best = kBottom;
      for (auto& b : s->supstar.branches) best = std::max(best, b.alpha * t1 + b.beta * x - b.a);
      return best;
    }
    case PshNode::Kind::Toric: {
      std::array<double, kMaxDim> t{};
      for (int j = 0; j < s->n; ++j) {
        double r2 = std::norm(z[static_cast<std::size_t>(j)]);
        t[static_cast<std::size_t>(j)] = r2 > 0.0 ? std::log(r2) : kBottom;
      }
      return s->toric->value(t.data());
    }
    case PshNode::Kind::Cutoff: {
      double v = evaluate(s->kids[0], z);
      if (v >= s->delta || !std::isfinite(v)) return v > 0 ? 0.0 : 1.0;  // +inf -> 0, -inf -> 1
      if (v <= s->a) return 1.0;
      return SmoothStep9::value((v - s->a) / (s->delta - s->a));
    }
  }
  throw std::logic_error("evaluate: bad node");
}

Jet2 evaluate_jet(const PshSpec& s, const std::array<complexd, kMaxDim>& z) {
  const int n = s->n;
  switch (s->kind) {
    case PshNode::Kind::Const:
      return Jet2::constant(n, s->a);
    case PshNode::Kind::Abs2:
      return abs2_jet(s->polys, z, n);
    case PshNode::Kind::Log: {
      Jet2 c = evaluate_jet(s->kids[0], z);
      if (!c.finite || c.v <= 0.0) return Jet2::bottom(n);
      return compose(c, std::log(c.v), 1.0 / c.v, -1.0 / (c.v * c.v));
    }
    case PshNode::Kind::Pow: {
      Jet2 c = evaluate_jet(s->kids[0], z);
      if (!c.finite) return Jet2::bottom(n);
      double v = std::max(c.v, 0.0);
      double a = s->a;
      if (v == 0.0) return Jet2::constant(n, 0.0);
      return compose(c, std::pow(v, a), a * std::pow(v, a - 1.0), a * (a - 1.0) * std::pow(v, a - 2.0));
    }
    case PshNode::Kind::PowerLog: {
      Jet2 f2 = abs2_jet(s->polys, z, n);
      if (f2.v <= 0.0) return Jet2::bottom(n);
      if (f2.v >= 1.0) throw std::domain_error("PowerLog evaluated outside {|f|^2 < 1}");
      Jet2 L = compose(f2, std::log(f2.v), 1.0 / f2.v, -1.0 / (f2.v * f2.v));
      double m = -L.v;
      double eps = s->a;
      // u = -m^eps as a function of L: u(L) = -(-L)^eps
      double u = -std::pow(m, eps);
      double du = eps * std::pow(m, eps - 1.0);
      double ddu = eps * (1.0 - eps) * std::pow(m, eps - 2.0);
      return compose(L, u, du, ddu);
    }
    case PshNode::Kind::NegPow: {
      Jet2 c = evaluate_jet(s->kids[0], z);
      if (!c.finite) return Jet2::bottom(n);
      if (c.v >= 0.0) throw std::domain_error("NegPow evaluated outside {child < 0}");
      double m = -c.v;
      double eps = s->a;
      return compose(c, -std::pow(m, eps), eps * std::pow(m, eps - 1.0),
                     eps * (1.0 - eps) * std::pow(m, eps - 2.0));
    }
    case PshNode::Kind::Sum: {
      Jet2 acc = Jet2::constant(n, 0.0);
      for (std::size_t i = 0; i < s->kids.size(); ++i) {
        Jet2 k = evaluate_jet(s->kids[i], z);
        if (!k.finite) return Jet2::bottom(n);
        acc = acc + scale(k, s->coeffs[i]);
      }
      return acc;
    }
    case PshNode::Kind::Prod: {
      Jet2 a = evaluate_jet(s->kids[0], z), b = evaluate_jet(s->kids[1], z);
      return a * b;
    }
    case PshNode::Kind::Max: {
      Jet2 a = evaluate_jet(s->kids[0], z), b = evaluate_jet(s->kids[1], z);
      return smooth_max(a, b, 0.0);
    }
    case PshNode::Kind::SMax: {
      Jet2 a = evaluate_jet(s->kids[0], z), b = evaluate_jet(s->kids[1], z);
      return smooth_max(a, b, s->delta);
    }
    case PshNode::Kind::ChiComp: {
      Jet2 u = evaluate_jet(s->kids[0], z), v = evaluate_jet(s->kids[1], z);
      if (!v.finite) return Jet2::bottom(n);
      const ChiFunction& chi = *s->chi;
      if (!u.finite) {
        Jet2 r = v;
        r.v += chi_at_minus_inf(chi);
        return r;
      }
      Jet2 d = u + scale(v, -1.0);
      Jet2 comp = compose(d, chi.value(d.v), chi.d1(d.v), chi.d2(d.v));
      return comp + v;
    }
    case PshNode::Kind::SupStar: {
      if (z[0] == complexd(0.0)) return Jet2::bottom(n);
      double t1 = std::log(std::norm(z[0]));
      double x = std::norm(z[1]);
      int best = 0;
      double bv = kBottom;
      for (std::size_t k = 0; k < s->supstar.branches.size(); ++k) {
        auto& b = s->supstar.branches[k];
        double v = b.alpha * t1 + b.beta * x - b.a;
        if (v > bv) { bv = v; best = static_cast<int>(k); }
      }
      auto& b = s->supstar.branches[static_cast<std::size_t>(best)];
      Jet2 r = Jet2::constant(n, bv);
      // d/dz of alpha log|z|^2 is alpha/z; |w|^2 contributes conj gradient w-bar.
      r.g[0] = b.alpha / z[0];
      r.g[1] = b.beta * std::conj(z[1]);
      r.h = HMat(n);
      r.h.at(1, 1) = b.beta;
      return r;
    }
    case PshNode::Kind::Toric: {
      std::array<double, kMaxDim> t{};
      for (int j = 0; j < n; ++j) {
        double r2 = std::norm(z[static_cast<std::size_t>(j)]);
        if (r2 <= 0.0) return Jet2::bottom(n);
        t[static_cast<std::size_t>(j)] = std::log(r2);
      }
      double f;
      std::array<double, kMaxDim> g{};
      std::array<double, kMaxDim * kMaxDim> h{};
      if (!s->toric->jet(t.data(), f, g.data(), h.data())) return Jet2::bottom(n);
      Jet2 r = Jet2::constant(n, f);
      // dt_j/dz_j = 1/z_j, so g_j = f_j / z_j and H_jk = f_jk / (z_j zbar_k).
      for (int j = 0; j < n; ++j) r.g[static_cast<std::size_t>(j)] = g[static_cast<std::size_t>(j)] / z[static_cast<std::size_t>(j)];
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          r.h.at(j, k) = h[static_cast<std::size_t>(j * kMaxDim + k)] /
                         (z[static_cast<std::size_t>(j)] * std::conj(z[static_cast<std::size_t>(k)]));
      return r;
    }
    case PshNode::Kind::Cutoff: {
      double v = evaluate(s->kids[0], z);
      if (v >= s->delta || (!std::isfinite(v) && v > 0)) return Jet2::constant(n, 0.0);
      if (v <= s->a || !std::isfinite(v)) return Jet2::constant(n, 1.0);
      Jet2 c = evaluate_jet(s->kids[0], z);
      double span = s->delta - s->a;
      double x = (v - s->a) / span;
      return compose(c, SmoothStep9::value(x), SmoothStep9::d1(x) / span, SmoothStep9::d2(x) / (span * span));
    }
  }
  throw std::logic_error("evaluate_jet: bad node");
}

// --- singular locus -----------------------------------------------------------

std::string singular_locus(const PshSpec& s) {
  switch (s->kind) {
    case PshNode::Kind::Const:
    case PshNode::Kind::Abs2:
      return "empty";
    case PshNode::Kind::Log: {
      if (s->kids[0]->kind == PshNode::Kind::Abs2) {
        std::string d = "{";
        const auto& f = s->kids[0]->polys;
        for (std::size_t m = 0; m < f.size(); ++m) {
          if (m) d += ", ";
          d += f.f[m].to_string() + " = 0";
        }
        return d + "}";
      }
      return "{argument = 0} (not algebraic)";
    }
    case PshNode::Kind::PowerLog: {
      std::string d = "{";
      for (std::size_t m = 0; m < s->polys.size(); ++m) {
        if (m) d += ", ";
        d += s->polys.f[m].to_string() + " = 0";
      }
      return d + "}";
    }
    case PshNode::Kind::Pow:
    case PshNode::Kind::NegPow:
      return singular_locus(s->kids[0]);
    case PshNode::Kind::Sum: {
      std::string d;
      for (std::size_t i = 0; i < s->kids.size(); ++i) {
        std::string k = singular_locus(s->kids[i]);
        if (k == "empty") continue;
        if (!d.empty()) d += " union ";
        d += k;
      }
      return d.empty() ? "empty" : d;
    }
    case PshNode::Kind::Prod:
      return "unknown";
    case PshNode::Kind::Max:
    case PshNode::Kind::SMax: {
      std::string a = singular_locus(s->kids[0]), b = singular_locus(s->kids[1]);
      if (a == "empty" || b == "empty") return "empty";
      return "(" + a + ") intersect (" + b + ")";
    }
    case PshNode::Kind::ChiComp:
      return "empty";  // chi is bounded below
    case PshNode::Kind::SupStar:
      return "{z1 = 0}";
    case PshNode::Kind::Toric:
      return s->toric->describe();
    case PshNode::Kind::Cutoff:
      return "empty";
  }
  return "unknown";
}

bool is_singular_at(const PshSpec& s, const std::array<complexd, kMaxDim>& z) {
  return !std::isfinite(evaluate(s, z));
}

// --- JSON round-trip -----------------------------------------------------------

namespace {

json poly_to_json(const Poly& p) {
  json terms = json::array();
  for (auto& [e, c] : p.terms) {
    json ex = json::array();
    for (int j = 0; j < p.nvars; ++j) ex.push_back(e[static_cast<std::size_t>(j)]);
    terms.push_back(json::array({ex, json::array({c.real(), c.imag()})}));
  }
  return json{{"nvars", p.nvars}, {"terms", terms}};
}

Poly poly_from_json(const json& j) {
  Poly p(j.at("nvars").get<int>());
  for (auto& t : j.at("terms")) {
    std::array<int, kMaxVars> e{};
    auto& ex = t[0];
    for (std::size_t i = 0; i < ex.size(); ++i) e[i] = ex[i].get<int>();
    p.add_term(e, complexd(t[1][0].get<double>(), t[1][1].get<double>()));
  }
  return p;
}

json tuple_to_json(const PolyTuple& f) {
  json arr = json::array();
  for (auto& p : f.f) arr.push_back(poly_to_json(p));
  return arr;
}

PolyTuple tuple_from_json(const json& j) {
  std::vector<Poly> polys;
  for (auto& p : j) polys.push_back(poly_from_json(p));
  return PolyTuple(std::move(polys));
}

json chi_to_json(const ChiFunction& c) {
  switch (c.kind) {
    case ChiFunction::Kind::HardMax:
      return json{{"kind", "hardmax"}, {"ell", c.ell}};
    case ChiFunction::Kind::SmoothMax:
      return json{{"kind", "smoothmax"}, {"ell", c.ell}, {"delta", c.delta}};
    case ChiFunction::Kind::LogExp:
      return json{{"kind", "logexp"}, {"eps", c.eps}};
  }
  return {};
}

ChiFunction chi_from_json(const json& j) {
  std::string k = j.at("kind").get<std::string>();
  if (k == "hardmax") return ChiFunction::hard_max(j.at("ell").get<double>());
  if (k == "smoothmax") return ChiFunction::smooth_max(j.at("ell").get<double>(), j.at("delta").get<double>());
  if (k == "logexp") return ChiFunction::log_exp(j.at("eps").get<double>());
  throw std::invalid_argument("chi_from_json: bad kind");
}

json node_to_json(const PshSpec& s) {
  json j;
  j["n"] = s->n;
  switch (s->kind) {
    case PshNode::Kind::Const:
      j["kind"] = "const";
      j["value"] = s->a;
      break;
    case PshNode::Kind::Abs2:
      j["kind"] = "abs2";
      j["f"] = tuple_to_json(s->polys);
      break;
    case PshNode::Kind::Log:
      j["kind"] = "log";
      j["child"] = node_to_json(s->kids[0]);
      break;
    case PshNode::Kind::Pow:
      j["kind"] = "pow";
      j["exponent"] = s->a;
      j["child"] = node_to_json(s->kids[0]);
      break;
    case PshNode::Kind::PowerLog:
      j["kind"] = "powerlog";
      j["eps"] = s->a;
      j["f"] = tuple_to_json(s->polys);
      break;
    case PshNode::Kind::NegPow:
      j["kind"] = "negpow";
      j["eps"] = s->a;
      j["child"] = node_to_json(s->kids[0]);
      break;
    case PshNode::Kind::Sum: {
      j["kind"] = "sum";
      json terms = json::array();
      for (std::size_t i = 0; i < s->kids.size(); ++i)
        terms.push_back(json::array({s->coeffs[i], node_to_json(s->kids[i])}));
      j["terms"] = terms;
      break;
    }
    case PshNode::Kind::Prod:
      j["kind"] = "prod";
      j["a"] = node_to_json(s->kids[0]);
      j["b"] = node_to_json(s->kids[1]);
      break;
    case PshNode::Kind::Max:
      j["kind"] = "max";
      j["a"] = node_to_json(s->kids[0]);
      j["b"] = node_to_json(s->kids[1]);
      break;
    case PshNode::Kind::SMax:
      j["kind"] = "smax";
      j["delta"] = s->delta;
      j["a"] = node_to_json(s->kids[0]);
      j["b"] = node_to_json(s->kids[1]);
      break;
    case PshNode::Kind::ChiComp:
      j["kind"] = "chicomp";
      j["chi"] = chi_to_json(*s->chi);
      j["u"] = node_to_json(s->kids[0]);
      j["v"] = node_to_json(s->kids[1]);
      break;
    case PshNode::Kind::SupStar: {
      j["kind"] = "supstar";
      json br = json::array();
      for (auto& b : s->supstar.branches) br.push_back(json::array({b.alpha, b.beta, b.a}));
      j["branches"] = br;
      j["shell_ell"] = s->supstar.shell_ell;
      j["w_radius"] = s->supstar.w_radius;
      break;
    }
    case PshNode::Kind::Toric:
      throw std::invalid_argument("psh_to_json: toric handles are not serializable");
    case PshNode::Kind::Cutoff:
      j["kind"] = "cutoff";
      j["plateau2"] = s->a;
      j["support2"] = s->delta;
      j["child"] = node_to_json(s->kids[0]);
      break;
  }
  return j;
}

PshSpec node_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  int n = j.at("n").get<int>();
  if (kind == "const") return psh_const(n, j.at("value").get<double>());
  if (kind == "abs2") return psh_abs2(tuple_from_json(j.at("f")));
  if (kind == "log") return psh_log(node_from_json(j.at("child")));
  if (kind == "pow") return psh_pow(node_from_json(j.at("child")), j.at("exponent").get<double>());
  if (kind == "powerlog") return power_log(j.at("eps").get<double>(), tuple_from_json(j.at("f")));
  if (kind == "negpow") return psh_negpow(node_from_json(j.at("child")), j.at("eps").get<double>());
  if (kind == "sum") {
    std::vector<double> coeffs;
    std::vector<PshSpec> kids;
    for (auto& t : j.at("terms")) {
      coeffs.push_back(t[0].get<double>());
      kids.push_back(node_from_json(t[1]));
    }
    return psh_sum(std::move(coeffs), std::move(kids));
  }
  if (kind == "prod") return psh_prod(node_from_json(j.at("a")), node_from_json(j.at("b")));
  if (kind == "max") return psh_max(node_from_json(j.at("a")), node_from_json(j.at("b")));
  if (kind == "smax")
    return psh_smax(node_from_json(j.at("a")), node_from_json(j.at("b")), j.at("delta").get<double>());
  if (kind == "chicomp") {
    ChiFunction chi = chi_from_json(j.at("chi"));
    return regularize(node_from_json(j.at("u")), node_from_json(j.at("v")), chi);
  }
  if (kind == "supstar") {
    SupStarData d;
    for (auto& b : j.at("branches")) d.branches.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>()});
    d.shell_ell = j.at("shell_ell").get<std::vector<double>>();
    d.w_radius = j.at("w_radius").get<double>();
    return supstar(std::move(d));
  }
  if (kind == "cutoff")
    return psh_cutoff(node_from_json(j.at("child")), std::sqrt(j.at("plateau2").get<double>()),
                      std::sqrt(j.at("support2").get<double>()));
  throw std::invalid_argument("psh_from_json: bad kind '" + kind + "'");
}

}  // namespace

std::string psh_to_json(const PshSpec& s) { return node_to_json(s).dump(); }

PshSpec psh_from_json(const std::string& text) { return node_from_json(json::parse(text)); }

std::uint64_t psh_hash(const PshSpec& s) {
  std::string t = psh_to_json(s);
  std::uint64_t h = 1469598103934665603ull;
  for (char c : t) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// --- SupStar construction -------------------------------------------------------

SupStarData build_supstar(int num_branches, double w_radius, double depth_spacing) {
  if (num_branches < 2) throw std::invalid_argument("build_supstar: need at least 2 branches");
  SupStarData d;
  d.w_radius = w_radius;
  const double xmax = w_radius * w_radius;
  if (depth_spacing <= 0.0) {
    // The k <-> k+1 crossing moves by 2 xmax k(k+1) in t as |w| sweeps its
    // disc; keep shells separated by 4x that plus a fixed margin.
    double wobble = 2.0 * xmax * num_branches * (num_branches + 1);
    depth_spacing = std::max(20.0, 4.0 * wobble + 8.0);
  }
  double a = depth_spacing / 2.0;  // a_1
  std::vector<double> depth(static_cast<std::size_t>(num_branches) + 1, 0.0);
  for (int k = 1; k <= num_branches; ++k) {
    double alpha = 1.0 + 1.0 / k;
    double beta = (k % 2 == 1) ? 2.0 : 0.0;
    d.branches.push_back({alpha, beta, a});
    depth[static_cast<std::size_t>(k)] = depth_spacing * k;
    if (k < num_branches) {
      // Place the k <-> k+1 crossing (at w = 0) at depth D_k.
      double alpha_gap = 1.0 / (static_cast<double>(k) * (k + 1));
      a = a + depth[static_cast<std::size_t>(k)] * alpha_gap;
    }
  }
  for (int k = 1; k <= num_branches; ++k) {
    auto& b = d.branches[static_cast<std::size_t>(k - 1)];
    double mid = 0.5 * (depth[static_cast<std::size_t>(k - 1)] + depth[static_cast<std::size_t>(k)]);
    d.shell_ell.push_back(b.alpha * mid + b.a);
  }
  return d;
}

}  // namespace nppl
