#include "nppl/toric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "nppl/chi.hpp"

namespace nppl {

namespace {
constexpr double kNegCut = -80.0;  // e^t below this is numerically zero

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
}  // namespace

double toric_calibration_constant(int n) { return factorial(n); }

TBox TBox::rays(int dim, std::array<double, kMaxDim> hi) {
  TBox b;
  for (int j = 0; j < dim; ++j) {
    b.lo[static_cast<std::size_t>(j)] = -kInf;
    b.hi[static_cast<std::size_t>(j)] = hi[static_cast<std::size_t>(j)];
  }
  return b;
}

// --- profile tree -------------------------------------------------------------

TProfile tprofile_const(int dim, double c) {
  TNode n;
  n.kind = TNode::Kind::Const;
  n.dim = dim;
  n.c0 = c;
  return std::make_shared<const TNode>(std::move(n));
}

TProfile tprofile_affine(int dim, double c0, std::array<double, kMaxDim> lin) {
  TNode n;
  n.kind = TNode::Kind::Affine;
  n.dim = dim;
  n.c0 = c0;
  n.lin = lin;
  return std::make_shared<const TNode>(std::move(n));
}

TProfile tprofile_exp(int dim, double w, std::array<double, kMaxDim> expo) {
  if (!(w > 0)) throw std::invalid_argument("tprofile_exp: weight must be positive");
  TNode n;
  n.kind = TNode::Kind::ExpAffine;
  n.dim = dim;
  n.w = w;
  n.lin = expo;
  return std::make_shared<const TNode>(std::move(n));
}

TProfile tprofile_sum(std::vector<double> coeffs, std::vector<TProfile> kids) {
  if (coeffs.size() != kids.size() || kids.empty()) throw std::invalid_argument("tprofile_sum: arity");
  TNode n;
  n.kind = TNode::Kind::Sum;
  n.dim = kids[0]->dim;
  n.coeffs = std::move(coeffs);
  n.kids = std::move(kids);
  return std::make_shared<const TNode>(std::move(n));
}

TProfile tprofile_lse(int dim, std::vector<std::pair<std::array<double, kMaxDim>, double>> terms) {
  if (terms.empty()) throw std::invalid_argument("tprofile_lse: empty");
  TNode n;
  n.kind = TNode::Kind::LSE;
  n.dim = dim;
  n.lse = std::move(terms);
  return std::make_shared<const TNode>(std::move(n));
}

TProfile tprofile_powerlog(double eps, TProfile lse_child) {
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("tprofile_powerlog: eps outside (0,1)");
  TNode n;
  n.kind = TNode::Kind::PowerLog;
  n.dim = lse_child->dim;
  n.eps = eps;
  n.kids = {std::move(lse_child)};
  return std::make_shared<const TNode>(std::move(n));
}

TProfile tprofile_max(std::vector<TProfile> kids) {
  if (kids.empty()) throw std::invalid_argument("tprofile_max: empty");
  TNode n;
  n.kind = TNode::Kind::Max;
  n.dim = kids[0]->dim;
  n.kids = std::move(kids);
  return std::make_shared<const TNode>(std::move(n));
}

TProfile tprofile_smax(TProfile a, TProfile b, double delta) {
  TNode n;
  n.kind = TNode::Kind::SMax;
  n.dim = a->dim;
  n.delta = delta;
  n.kids = {std::move(a), std::move(b)};
  return std::make_shared<const TNode>(std::move(n));
}

double tprofile_value(const TProfile& f, const double* t) {
  switch (f->kind) {
    case TNode::Kind::Const:
      return f->c0;
    case TNode::Kind::Affine: {
      double v = f->c0;
      for (int j = 0; j < f->dim; ++j) {
        double lj = f->lin[static_cast<std::size_t>(j)];
        if (lj == 0.0) continue;
        if (!std::isfinite(t[j])) return lj > 0 ? kBottom : std::numeric_limits<double>::infinity();
        v += lj * t[j];
      }
      return v;
    }
    case TNode::Kind::ExpAffine: {
      double e = 0.0;
      for (int j = 0; j < f->dim; ++j) {
        double lj = f->lin[static_cast<std::size_t>(j)];
        if (lj == 0.0) continue;
        if (!std::isfinite(t[j])) return 0.0;  // e^{-inf}
        e += lj * t[j];
      }
      return f->w * std::exp(e);
    }
    case TNode::Kind::Sum: {
      double acc = 0.0;
      for (std::size_t i = 0; i < f->kids.size(); ++i) {
        double v = tprofile_value(f->kids[i], t);
        if (!std::isfinite(v)) return v > 0 ? v : kBottom;
        acc += f->coeffs[i] * v;
      }
      return acc;
    }
    case TNode::Kind::LSE: {
      double best = kBottom;
      for (auto& [a, c] : f->lse) {
        double e = c;
        bool zero = false;
        for (int j = 0; j < f->dim; ++j) {
          if (a[static_cast<std::size_t>(j)] == 0.0) continue;
          if (!std::isfinite(t[j])) { zero = true; break; }
          e += a[static_cast<std::size_t>(j)] * t[j];
        }
        if (!zero) best = std::max(best, e);
      }
      if (!std::isfinite(best)) return kBottom;
      double s = 0.0;
      for (auto& [a, c] : f->lse) {
        double e = c;
        bool zero = false;
        for (int j = 0; j < f->dim; ++j) {
          if (a[static_cast<std::size_t>(j)] == 0.0) continue;
          if (!std::isfinite(t[j])) { zero = true; break; }
          e += a[static_cast<std::size_t>(j)] * t[j];
        }
        if (!zero) s += std::exp(e - best);
      }
      return best + std::log(s);
    }
    case TNode::Kind::PowerLog: {
      double L = tprofile_value(f->kids[0], t);
      if (!std::isfinite(L)) return kBottom;
      return -std::pow(std::max(-L, 1e-15), f->eps);
    }
    case TNode::Kind::Max: {
      double best = kBottom;
      for (auto& k : f->kids) best = std::max(best, tprofile_value(k, t));
      return best;
    }
    case TNode::Kind::SMax: {
      double a = tprofile_value(f->kids[0], t), b = tprofile_value(f->kids[1], t);
      if (!std::isfinite(a)) return b;
      if (!std::isfinite(b)) return a;
      double d = a - b;
      return 0.5 * (a + b + std::sqrt(d * d + f->delta * f->delta));
    }
  }
  throw std::logic_error("tprofile_value: bad node");
}

bool tprofile_jet(const TProfile& f, const double* t, TJet& out) {
  const int n = f->dim;
  auto zero_out = [&]() {
    out = TJet{};
    out.g.fill(0.0);
    out.h.fill(0.0);
  };
  switch (f->kind) {
    case TNode::Kind::Const:
      zero_out();
      out.v = f->c0;
      return true;
    case TNode::Kind::Affine: {
      zero_out();
      out.v = f->c0;
      for (int j = 0; j < n; ++j) {
        out.v += f->lin[static_cast<std::size_t>(j)] * t[j];
        out.g[static_cast<std::size_t>(j)] = f->lin[static_cast<std::size_t>(j)];
      }
      return std::isfinite(out.v);
    }
    case TNode::Kind::ExpAffine: {
      zero_out();
      double e = 0.0;
      for (int j = 0; j < n; ++j) e += f->lin[static_cast<std::size_t>(j)] * t[j];
      double v = f->w * std::exp(e);
      out.v = v;
      for (int j = 0; j < n; ++j) out.g[static_cast<std::size_t>(j)] = f->lin[static_cast<std::size_t>(j)] * v;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          out.h[static_cast<std::size_t>(j * kMaxDim + k)] =
              f->lin[static_cast<std::size_t>(j)] * f->lin[static_cast<std::size_t>(k)] * v;
      return true;
    }
    case TNode::Kind::Sum: {
      zero_out();
      for (std::size_t i = 0; i < f->kids.size(); ++i) {
        TJet k;
        if (!tprofile_jet(f->kids[i], t, k)) return false;
        double c = f->coeffs[i];
        out.v += c * k.v;
        for (int j = 0; j < n; ++j) out.g[static_cast<std::size_t>(j)] += c * k.g[static_cast<std::size_t>(j)];
        for (int j = 0; j < n * kMaxDim; ++j) out.h[static_cast<std::size_t>(j)] += c * k.h[static_cast<std::size_t>(j)];
      }
      return true;
    }
    case TNode::Kind::LSE: {
      zero_out();
      double best = -1e308;
      for (auto& [a, c] : f->lse) {
        double e = c;
        for (int j = 0; j < n; ++j) e += a[static_cast<std::size_t>(j)] * t[j];
        best = std::max(best, e);
      }
      if (best <= -1e307) return false;
      double Z = 0.0;
      std::array<double, kMaxDim> mean{};
      std::array<double, kMaxDim * kMaxDim> second{};
      for (auto& [a, c] : f->lse) {
        double e = c;
        for (int j = 0; j < n; ++j) e += a[static_cast<std::size_t>(j)] * t[j];
        double p = std::exp(e - best);
        Z += p;
        for (int j = 0; j < n; ++j) {
          mean[static_cast<std::size_t>(j)] += p * a[static_cast<std::size_t>(j)];
          for (int k = 0; k < n; ++k)
            second[static_cast<std::size_t>(j * kMaxDim + k)] += p * a[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(k)];
        }
      }
      out.v = best + std::log(Z);
      for (int j = 0; j < n; ++j) out.g[static_cast<std::size_t>(j)] = mean[static_cast<std::size_t>(j)] / Z;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          out.h[static_cast<std::size_t>(j * kMaxDim + k)] =
              second[static_cast<std::size_t>(j * kMaxDim + k)] / Z -
              out.g[static_cast<std::size_t>(j)] * out.g[static_cast<std::size_t>(k)];
      return true;
    }
    case TNode::Kind::PowerLog: {
      TJet L;
      if (!tprofile_jet(f->kids[0], t, L)) return false;
      double m = std::max(-L.v, 1e-15);
      double eps = f->eps;
      double u = -std::pow(m, eps);
      double du = eps * std::pow(m, eps - 1.0);        // du/dL
      double ddu = eps * (1.0 - eps) * std::pow(m, eps - 2.0);
      out = TJet{};
      out.v = u;
      for (int j = 0; j < n; ++j) out.g[static_cast<std::size_t>(j)] = du * L.g[static_cast<std::size_t>(j)];
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          out.h[static_cast<std::size_t>(j * kMaxDim + k)] =
              du * L.h[static_cast<std::size_t>(j * kMaxDim + k)] +
              ddu * L.g[static_cast<std::size_t>(j)] * L.g[static_cast<std::size_t>(k)];
      return true;
    }
    case TNode::Kind::Max: {
      int best = -1;
      double bv = kBottom;
      for (std::size_t i = 0; i < f->kids.size(); ++i) {
        double v = tprofile_value(f->kids[i], t);
        if (v > bv) { bv = v; best = static_cast<int>(i); }
      }
      if (best < 0) return false;
      return tprofile_jet(f->kids[static_cast<std::size_t>(best)], t, out);
    }
    case TNode::Kind::SMax: {
      TJet a, b;
      bool fa = tprofile_jet(f->kids[0], t, a);
      bool fb = tprofile_jet(f->kids[1], t, b);
      if (!fa && !fb) return false;
      if (!fa) { out = b; return true; }
      if (!fb) { out = a; return true; }
      double s = a.v - b.v;
      double q = std::sqrt(s * s + f->delta * f->delta);
      double ma = 0.5 * (1.0 + s / q), mb = 0.5 * (1.0 - s / q);
      double w = 0.5 * f->delta * f->delta / (q * q * q);
      out = TJet{};
      out.v = 0.5 * (a.v + b.v + q);
      for (int j = 0; j < n; ++j)
        out.g[static_cast<std::size_t>(j)] = ma * a.g[static_cast<std::size_t>(j)] + mb * b.g[static_cast<std::size_t>(j)];
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double gj = a.g[static_cast<std::size_t>(j)] - b.g[static_cast<std::size_t>(j)];
          double gk = a.g[static_cast<std::size_t>(k)] - b.g[static_cast<std::size_t>(k)];
          out.h[static_cast<std::size_t>(j * kMaxDim + k)] =
              ma * a.h[static_cast<std::size_t>(j * kMaxDim + k)] + mb * b.h[static_cast<std::size_t>(j * kMaxDim + k)] +
              w * gj * gk;
        }
      return true;
    }
  }
  throw std::logic_error("tprofile_jet: bad node");
}

// --- ToricEval adapter ----------------------------------------------------------

namespace {
struct ProfileToricEval : ToricEval {
  ConvexProfile profile;
  explicit ProfileToricEval(ConvexProfile p) : profile(std::move(p)) {}
  int dim() const override { return profile.dim; }
  double value(const double* t) const override { return tprofile_value(profile.root, t); }
  bool jet(const double* t, double& f, double* g, double* h) const override {
    TJet j;
    if (!tprofile_jet(profile.root, t, j)) return false;
    f = j.v;
    for (int a = 0; a < profile.dim; ++a) g[a] = j.g[static_cast<std::size_t>(a)];
    for (int a = 0; a < kMaxDim * kMaxDim; ++a) h[a] = j.h[static_cast<std::size_t>(a)];
    return true;
  }
  std::string describe() const override { return profile.describe(); }
};
}  // namespace

std::shared_ptr<const ToricEval> toric_eval_of(const ConvexProfile& f) {
  return std::make_shared<ProfileToricEval>(f);
}

std::string ConvexProfile::describe() const {
  std::ostringstream os;
  os << "toric profile (dim " << dim << ")";
  if (pl) os << ", piecewise-linear with " << pl->size() << " pieces";
  if (family) os << ", max-family with " << family->branches.size() << " branches";
  return os.str();
}

// --- classifier -------------------------------------------------------------------

namespace {

std::array<double, kMaxDim> monomial_exponents(const Poly& p, complexd* coeff) {
  std::array<int, kMaxVars> e{};
  complexd c;
  if (!p.is_monomial(&e, &c)) throw NonToricError(p.to_string());
  std::array<double, kMaxDim> a{};
  for (int j = 0; j < kMaxDim && j < p.nvars; ++j) a[static_cast<std::size_t>(j)] = e[static_cast<std::size_t>(j)];
  if (coeff) *coeff = c;
  return a;
}

TProfile translate(const PshSpec& s) {
  const int n = s->n;
  switch (s->kind) {
    case PshNode::Kind::Const:
      return tprofile_const(n, s->a);
    case PshNode::Kind::Abs2: {
      std::vector<double> coeffs;
      std::vector<TProfile> kids;
      for (auto& p : s->polys.f) {
        complexd c;
        auto a = monomial_exponents(p, &c);
        kids.push_back(tprofile_exp(n, std::norm(c), a));
        coeffs.push_back(1.0);
      }
      if (kids.size() == 1) return kids[0];
      return tprofile_sum(std::move(coeffs), std::move(kids));
    }
    case PshNode::Kind::Log: {
      if (s->kids[0]->kind != PshNode::Kind::Abs2) throw NonToricError("log of non-|polynomial|^2 argument");
      std::vector<std::pair<std::array<double, kMaxDim>, double>> terms;
      for (auto& p : s->kids[0]->polys.f) {
        complexd c;
        auto a = monomial_exponents(p, &c);
        terms.emplace_back(a, std::log(std::norm(c)));
      }
      if (terms.size() == 1) return tprofile_affine(n, terms[0].second, terms[0].first);
      return tprofile_lse(n, std::move(terms));
    }
    case PshNode::Kind::PowerLog: {
      std::vector<std::pair<std::array<double, kMaxDim>, double>> terms;
      for (auto& p : s->polys.f) {
        complexd c;
        auto a = monomial_exponents(p, &c);
        terms.emplace_back(a, std::log(std::norm(c)));
      }
      return tprofile_powerlog(s->a, tprofile_lse(n, std::move(terms)));
    }
    case PshNode::Kind::Sum: {
      std::vector<TProfile> kids;
      for (auto& k : s->kids) kids.push_back(translate(k));
      return tprofile_sum(s->coeffs, std::move(kids));
    }
    case PshNode::Kind::Prod: {
      if (s->kids[0]->kind == PshNode::Kind::Const)
        return tprofile_sum({s->kids[0]->a}, {translate(s->kids[1])});
      if (s->kids[1]->kind == PshNode::Kind::Const)
        return tprofile_sum({s->kids[1]->a}, {translate(s->kids[0])});
      throw NonToricError("product of non-constant factors");
    }
    case PshNode::Kind::Max:
      return tprofile_max({translate(s->kids[0]), translate(s->kids[1])});
    case PshNode::Kind::SMax:
      return tprofile_smax(translate(s->kids[0]), translate(s->kids[1]), s->delta);
    case PshNode::Kind::ChiComp:
      throw NonToricError("chi-composition (regularize before reducing)");
    case PshNode::Kind::SupStar: {
      std::vector<TProfile> kids;
      for (auto& b : s->supstar.branches) {
        TProfile aff = tprofile_affine(2, -b.a, {b.alpha, 0.0, 0.0});
        if (b.beta != 0.0)
          aff = tprofile_sum({1.0, b.beta}, {aff, tprofile_exp(2, 1.0, {0.0, 1.0, 0.0})});
        kids.push_back(aff);
      }
      return tprofile_max(std::move(kids));
    }
    case PshNode::Kind::NegPow: {
      TProfile inner = translate(s->kids[0]);
      // the PowerLog profile node accepts any convex child L with L < 0
      TNode n2;
      n2.kind = TNode::Kind::PowerLog;
      n2.dim = inner->dim;
      n2.eps = s->a;
      n2.kids = {inner};
      return std::make_shared<const TNode>(std::move(n2));
    }
    case PshNode::Kind::Pow:
      throw NonToricError("pow");
    case PshNode::Kind::Cutoff:
      throw NonToricError("cutoff");
    case PshNode::Kind::Toric: {
      auto* pe = dynamic_cast<const ProfileToricEval*>(s->toric.get());
      if (!pe) throw NonToricError("opaque toric handle");
      return pe->profile.root;
    }
  }
  throw NonToricError("unsupported node");
}

Rat rat_approx(double x, long long max_den = 1000000) {
  // Continued fractions; catalog gradients are small rationals.
  long long sign = x < 0 ? -1 : 1;
  x = std::abs(x);
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    long long a = static_cast<long long>(std::floor(v));
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double frac = v - static_cast<double>(a);
    if (std::abs(static_cast<double>(p1) / q1 - x) < 1e-12 || frac < 1e-15) break;
    v = 1.0 / frac;
  }
  return Rat(sign * p1, q1);
}

// Collect pure max-affine structure: max over leaves of affine functions.
bool collect_pl(const TProfile& f, double coeff, std::vector<PlPiece>& out) {
  switch (f->kind) {
    case TNode::Kind::Affine: {
      if (coeff <= 0) return false;
      PlPiece p;
      p.a[0] = rat_approx(coeff * f->lin[0]);
      p.a[1] = rat_approx(coeff * f->lin[1]);
      p.c = coeff * f->c0;
      out.push_back(p);
      return true;
    }
    case TNode::Kind::Const: {
      PlPiece p;
      p.c = coeff * f->c0;
      out.push_back(p);
      return true;
    }
    case TNode::Kind::Max: {
      if (coeff <= 0) return false;
      for (auto& k : f->kids)
        if (!collect_pl(k, coeff, out)) return false;
      return true;
    }
    case TNode::Kind::Sum: {
      // only scalar rescaling of a single max/affine child
      if (f->kids.size() == 1) return collect_pl(f->kids[0], coeff * f->coeffs[0], out);
      return false;
    }
    default:
      return false;
  }
}

// Collect max-family structure: max over branches alpha t1 + beta e^{t2} + c.
bool collect_family_branch(const TProfile& f, double coeff, MaxFamilyBranch& b) {
  switch (f->kind) {
    case TNode::Kind::Const:
      b.c += coeff * f->c0;
      return true;
    case TNode::Kind::Affine:
      if (f->lin[1] != 0.0 || f->lin[2] != 0.0) return false;
      b.alpha += coeff * f->lin[0];
      b.c += coeff * f->c0;
      return true;
    case TNode::Kind::ExpAffine:
      if (f->lin[0] != 0.0 || f->lin[2] != 0.0 || f->lin[1] != 1.0) return false;
      b.beta += coeff * f->w;
      return true;
    case TNode::Kind::Sum: {
      for (std::size_t i = 0; i < f->kids.size(); ++i)
        if (!collect_family_branch(f->kids[i], coeff * f->coeffs[i], b)) return false;
      return true;
    }
    default:
      return false;
  }
}

bool collect_family(const TProfile& f, MaxFamily& out) {
  if (f->kind == TNode::Kind::Max || f->kind == TNode::Kind::SMax) {
    for (auto& k : f->kids)
      if (!collect_family(k, out)) return false;
    return true;
  }
  MaxFamilyBranch b;
  if (!collect_family_branch(f, 1.0, b)) return false;
  out.branches.push_back(b);
  return true;
}

void split_divisor(const TProfile& f, std::array<double, kMaxDim>& coeffs) {
  if (f->kind == TNode::Kind::Affine) {
    for (int j = 0; j < kMaxDim; ++j) coeffs[static_cast<std::size_t>(j)] += f->lin[static_cast<std::size_t>(j)];
    return;
  }
  if (f->kind == TNode::Kind::Sum) {
    for (std::size_t i = 0; i < f->kids.size(); ++i) {
      if (f->kids[i]->kind == TNode::Kind::Affine) {
        for (int j = 0; j < kMaxDim; ++j)
          coeffs[static_cast<std::size_t>(j)] += f->coeffs[i] * f->kids[i]->lin[static_cast<std::size_t>(j)];
      }
    }
  }
}

}  // namespace

ConvexProfile toric_profile(const PshSpec& u, bool validate, std::uint64_t seed) {
  ConvexProfile prof;
  prof.dim = u->n;
  prof.root = translate(u);

  std::vector<PlPiece> pl;
  if (u->n <= 2 && collect_pl(prof.root, 1.0, pl)) prof.pl = std::move(pl);
  MaxFamily fam;
  if (u->n == 2 && collect_family(prof.root, fam)) prof.family = std::move(fam);
  split_divisor(prof.root, prof.divisor_coeffs);

  if (validate) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> radial(0.05, 1.0), angle(0.0, 2 * kPi);
    for (int it = 0; it < 1000; ++it) {
      std::array<complexd, kMaxDim> z{};
      std::array<double, kMaxDim> t{};
      for (int j = 0; j < u->n; ++j) {
        double r = radial(rng), th = angle(rng);
        z[static_cast<std::size_t>(j)] = std::polar(r, th);
        t[static_cast<std::size_t>(j)] = std::log(r * r);
      }
      double a = evaluate(u, z);
      double b = tprofile_value(prof.root, t.data());
      double scale = std::max({1.0, std::abs(a), std::abs(b)});
      if (std::isfinite(a) != std::isfinite(b) || (std::isfinite(a) && std::abs(a - b) > 1e-12 * scale))
        throw std::runtime_error("toric_profile: reduction mismatch against direct evaluation");
    }
    // Convexity (midpoint inequality) and monotonicity on a sample grid.
    std::uniform_real_distribution<double> ts(-12.0, 0.0);
    for (int it = 0; it < 400; ++it) {
      std::array<double, kMaxDim> s{}, t{}, m{};
      for (int j = 0; j < u->n; ++j) {
        s[static_cast<std::size_t>(j)] = ts(rng);
        t[static_cast<std::size_t>(j)] = ts(rng);
        m[static_cast<std::size_t>(j)] = 0.5 * (s[static_cast<std::size_t>(j)] + t[static_cast<std::size_t>(j)]);
      }
      double fs = tprofile_value(prof.root, s.data());
      double ft = tprofile_value(prof.root, t.data());
      double fm = tprofile_value(prof.root, m.data());
      if (std::isfinite(fs) && std::isfinite(ft) && std::isfinite(fm)) {
        double slack = 1e-10 * std::max({1.0, std::abs(fs), std::abs(ft)});
        if (fm > 0.5 * (fs + ft) + slack) throw std::runtime_error("toric_profile: convexity certificate failed");
      }
      // nondecreasing in each t_j
      for (int j = 0; j < u->n; ++j) {
        std::array<double, kMaxDim> sp = s;
        sp[static_cast<std::size_t>(j)] += 0.5;
        double fsp = tprofile_value(prof.root, sp.data());
        if (std::isfinite(fs) && std::isfinite(fsp) && fsp < fs - 1e-10 * std::max(1.0, std::abs(fs)))
          throw std::runtime_error("toric_profile: monotonicity certificate failed");
      }
    }
  }
  return prof;
}

// --- smooth quadrature masses -----------------------------------------------------

namespace {

// MD_t of j copies of A and (n-j) copies of diag(e^{t}) background.
double md_with_background(const TJet& fj, const double* t, int dim, int p) {
  if (dim == 1) {
    return p == 1 ? fj.h[0] : std::exp(t[0]);
  }
  double a11 = fj.h[0], a12 = fj.h[1], a21 = fj.h[kMaxDim], a22 = fj.h[kMaxDim + 1];
  double b1 = std::exp(t[0]), b2 = std::exp(t[1]);
  if (p == 2) return a11 * a22 - a12 * a21;
  if (p == 1) return 0.5 * (a11 * b2 + a22 * b1);
  return b1 * b2;  // p == 0
}

struct QuadCtx {
  const ConvexProfile* f;
  int p = 1;
  double psd_tol = 1e-9;
  mutable bool indefinite = false;
  bool weight_abs_f = false;  // |f|-weight for energy integrals

  double integrand(const double* t) const {
    TJet j;
    if (!tprofile_jet(this->f->root, t, j)) return 0.0;
    int dim = this->f->dim;
    if (dim == 2) {
      double a11 = j.h[0], a22 = j.h[kMaxDim + 1];
      double dt = a11 * a22 - j.h[1] * j.h[kMaxDim];
      double scale = std::max({1.0, std::abs(a11), std::abs(a22)});
      if (a11 < -psd_tol * scale || a22 < -psd_tol * scale || dt < -psd_tol * scale * scale) indefinite = true;
    } else if (j.h[0] < -psd_tol) {
      indefinite = true;
    }
    double v = md_with_background(j, t, dim, p);
    if (weight_abs_f) v *= std::abs(j.v);
    return v;
  }
};

}  // namespace

MaMassResult real_ma_mass(const ConvexProfile& f, const TBox& E, int p, double tol) {
  if (p < 0 || p > f.dim) throw std::invalid_argument("real_ma_mass: p out of range");
  if (f.dim > 2) throw std::invalid_argument("real_ma_mass: dim > 2 not supported");
  QuadCtx ctx{&f, p};
  double lo0 = std::max(E.lo[0], kNegCut), hi0 = std::min(E.hi[0], 60.0);
  MaMassResult r;
  if (f.dim == 1) {
    r.value = toric_calibration_constant(1) *
              adaptive_simpson([&](double t1) { return ctx.integrand(&t1); }, lo0, hi0, tol, 40, 8);
  } else {
    double lo1 = std::max(E.lo[1], kNegCut), hi1 = std::min(E.hi[1], 60.0);
    r.value = toric_calibration_constant(2) *
              adaptive_simpson(
                  [&](double t2) {
                    return adaptive_simpson(
                        [&](double t1) {
                          double t[2] = {t1, t2};
                          return ctx.integrand(t);
                        },
                        lo0, hi0, tol * 0.1, 40, 8);
                  },
                  lo1, hi1, tol, 40, 6);
  }
  r.err_est = tol * std::max(1.0, std::abs(r.value));
  if (ctx.indefinite) throw std::runtime_error("real_ma_mass: indefinite Hessian (non-psh profile)");
  return r;
}

// --- PL exact path -----------------------------------------------------------------

namespace {

Rat cross(const std::array<Rat, 2>& o, const std::array<Rat, 2>& a, const std::array<Rat, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double hull_area_d(std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) {
                          return std::abs(a[0] - b[0]) < 1e-12 && std::abs(a[1] - b[1]) < 1e-12;
                        }),
            pts.end());
  if (pts.size() < 3) return 0.0;
  auto cross_d = [](const std::array<double, 2>& o, const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> hull;
  for (auto& p : pts) {
    while (hull.size() >= 2 && cross_d(hull[hull.size() - 2], hull.back(), p) <= 0) hull.pop_back();
    hull.push_back(p);
  }
  std::size_t lower = hull.size() + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (hull.size() >= lower && cross_d(hull[hull.size() - 2], hull.back(), *it) <= 0) hull.pop_back();
    hull.push_back(*it);
  }
  hull.pop_back();
  double area = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    auto& p = hull[i];
    auto& q = hull[(i + 1) % hull.size()];
    area += p[0] * q[1] - q[0] * p[1];
  }
  return std::abs(area) / 2.0;
}

Rat hull_area(std::vector<std::array<Rat, 2>> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& p, const auto& q) {
    if (!(p[0] == q[0])) return p[0] < q[0];
    return p[1] < q[1];
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return Rat(0);
  std::vector<std::array<Rat, 2>> hull;
  // lower
  for (auto& p : pts) {
    while (hull.size() >= 2 && !(Rat(0) < cross(hull[hull.size() - 2], hull.back(), p))) hull.pop_back();
    hull.push_back(p);
  }
  // upper
  std::size_t lower = hull.size() + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (hull.size() >= lower && !(Rat(0) < cross(hull[hull.size() - 2], hull.back(), *it))) hull.pop_back();
    hull.push_back(*it);
  }
  hull.pop_back();
  Rat area(0);
  for (std::size_t i = 0; i < hull.size(); ++i) {
    auto& p = hull[i];
    auto& q = hull[(i + 1) % hull.size()];
    area = area + (p[0] * q[1] - q[0] * p[1]);
  }
  if (area < Rat(0)) area = Rat(0) - area;
  return area / Rat(2);
}

}  // namespace

Rat pl_exact_mass(const std::vector<PlPiece>& pieces, int n, const TBox& E) {
  if (pieces.empty()) throw std::invalid_argument("pl_exact_mass: no pieces");
  if (n == 1) {
    // total mass over [lo, hi] = f'_+(hi) - f'_-(lo)
    auto value_at = [&](double t) {
      double best = -1e308;
      for (auto& p : pieces) best = std::max(best, p.a[0].to_double() * t + p.c);
      return best;
    };
    double lo = std::max(E.lo[0], -1e6), hi = std::min(E.hi[0], 1e6);
    Rat right(-1000000), left(1000000);
    double vh = value_at(hi), vl = value_at(lo);
    for (auto& p : pieces) {
      if (std::abs(p.a[0].to_double() * hi + p.c - vh) < 1e-9 * std::max(1.0, std::abs(vh)) && right < p.a[0])
        right = p.a[0];
      if (std::abs(p.a[0].to_double() * lo + p.c - vl) < 1e-9 * std::max(1.0, std::abs(vl)) && p.a[0] < left)
        left = p.a[0];
    }
    return right - left;  // times 1! = 1
  }
  if (n != 2) throw std::invalid_argument("pl_exact_mass: n <= 2 only");

  auto value_at = [&](double t0, double t1) {
    double best = -1e308;
    for (auto& p : pieces) best = std::max(best, p.a[0].to_double() * t0 + p.a[1].to_double() * t1 + p.c);
    return best;
  };

  // Vertex candidates: intersections of crease lines from piece pairs.
  struct Vertex {
    double t0, t1;
  };
  std::vector<Vertex> verts;
  const std::size_t m = pieces.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = k + 1; l < m; ++l) {
          if (i == k && j == l) continue;
          double a11 = pieces[i].a[0].to_double() - pieces[j].a[0].to_double();
          double a12 = pieces[i].a[1].to_double() - pieces[j].a[1].to_double();
          double a21 = pieces[k].a[0].to_double() - pieces[l].a[0].to_double();
          double a22 = pieces[k].a[1].to_double() - pieces[l].a[1].to_double();
          double b1 = pieces[j].c - pieces[i].c;
          double b2 = pieces[l].c - pieces[k].c;
          double det = a11 * a22 - a12 * a21;
          if (std::abs(det) < 1e-12) continue;
          double t0 = (b1 * a22 - b2 * a12) / det;
          double t1 = (a11 * b2 - a21 * b1) / det;
          verts.push_back({t0, t1});
        }

  // Dedupe and keep genuine subdivision vertices inside E.
  std::vector<Vertex> uniq;
  for (auto& v : verts) {
    if (v.t0 < E.lo[0] - 1e-9 || v.t0 > E.hi[0] + 1e-9 || v.t1 < E.lo[1] - 1e-9 || v.t1 > E.hi[1] + 1e-9) continue;
    bool dup = false;
    for (auto& u : uniq)
      if (std::abs(u.t0 - v.t0) < 1e-7 && std::abs(u.t1 - v.t1) < 1e-7) { dup = true; break; }
    if (!dup) uniq.push_back(v);
  }

  Rat total(0);
  for (auto& v : uniq) {
    double val = value_at(v.t0, v.t1);
    std::vector<std::array<Rat, 2>> grads;
    for (auto& p : pieces) {
      double pv = p.a[0].to_double() * v.t0 + p.a[1].to_double() * v.t1 + p.c;
      if (std::abs(pv - val) < 1e-7 * std::max(1.0, std::abs(val))) grads.push_back({p.a[0], p.a[1]});
    }
    if (grads.size() >= 3) total = total + hull_area(std::move(grads));
  }
  return total * Rat(2);  // times n! = 2
}

// --- max-family sweep ----------------------------------------------------------------

namespace {

// Upper-envelope active sequence of lines (slope alpha, intercept b) sorted by
// slope, restricted to t1 <= T1. Returns indices into the input in activation
// order (t1 from -inf up to T1) and the kink positions between them.
void fiber_envelope(const std::vector<double>& alpha, const std::vector<double>& b, double T1,
                    std::vector<int>& active, std::vector<double>& kinks) {
  active.clear();
  kinks.clear();
  const std::size_t m = alpha.size();
  std::vector<int> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (alpha[static_cast<std::size_t>(i)] != alpha[static_cast<std::size_t>(j)])
      return alpha[static_cast<std::size_t>(i)] < alpha[static_cast<std::size_t>(j)];
    return b[static_cast<std::size_t>(i)] < b[static_cast<std::size_t>(j)];
  });
  // drop dominated duplicates with equal slope (keep max intercept)
  std::vector<int> cand;
  for (int id : order) {
    if (!cand.empty() && alpha[static_cast<std::size_t>(cand.back())] == alpha[static_cast<std::size_t>(id)]) cand.pop_back();
    cand.push_back(id);
  }
  // convex-hull trick from smallest slope
  std::vector<double> pos;  // kink where cand[i] overtakes previous active
  for (int id : cand) {
    double a2 = alpha[static_cast<std::size_t>(id)], b2 = b[static_cast<std::size_t>(id)];
    while (!active.empty()) {
      int prev = active.back();
      double a1 = alpha[static_cast<std::size_t>(prev)], b1 = b[static_cast<std::size_t>(prev)];
      double x = (b1 - b2) / (a2 - a1);  // a2 > a1
      if (!pos.empty() && x <= pos.back()) {
        active.pop_back();
        pos.pop_back();
        continue;
      }
      pos.push_back(x);
      break;
    }
    active.push_back(id);
  }
  // restrict to t1 <= T1
  std::size_t keep = active.size();
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (pos[i] > T1) { keep = i + 1; break; }
  active.resize(keep);
  pos.resize(keep > 0 ? keep - 1 : 0);
  kinks = pos;
}

}  // namespace

FamilyVolResult family_subdiff_vol(const MaxFamily& F, double T1, double Xmax,
                                   const std::function<double(double)>* weightX) {
  FamilyVolResult res;
  const auto& br = F.branches;
  const std::size_t m = br.size();
  if (m == 0) return res;

  // Candidate pattern-change X values: triple coincidences and T1 exits.
  std::vector<double> events{0.0, Xmax};
  auto kink_at = [&](std::size_t i, std::size_t j, double X) {
    return ((br[j].c - br[i].c) + (br[j].beta - br[i].beta) * X) / (br[i].alpha - br[j].alpha);
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      if (br[i].alpha == br[j].alpha) continue;
      // exit through T1: kink_ij(X) == T1, linear in X
      double A = (br[j].beta - br[i].beta) / (br[i].alpha - br[j].alpha);
      double B = (br[j].c - br[i].c) / (br[i].alpha - br[j].alpha);
      if (A != 0.0) {
        double X = (T1 - B) / A;
        if (X > 0 && X < Xmax) events.push_back(X);
      }
      for (std::size_t k = 0; k < m; ++k) {
        if (k == i || k == j || br[i].alpha == br[k].alpha) continue;
        // kink_ij(X) == kink_ik(X), linear in X
        double A2 = (br[k].beta - br[i].beta) / (br[i].alpha - br[k].alpha);
        double B2 = (br[k].c - br[i].c) / (br[i].alpha - br[k].alpha);
        if (A == A2) continue;
        double X = (B2 - B) / (A - A2);
        if (X > 0 && X < Xmax) events.push_back(X);
      }
    }
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               events.end());

  auto weight_integral = [&](double a, double b) {
    if (!weightX) return b - a;
    return adaptive_simpson(*weightX, a, b, 1e-11);
  };

  std::vector<double> alpha(m), intercept(m);
  for (std::size_t i = 0; i < m; ++i) alpha[i] = br[i].alpha;

  double vol = 0.0;
  double min_kink = 1e308, max_kink = -1e308;
  for (std::size_t e = 0; e + 1 < events.size(); ++e) {
    double xa = events[e], xb = events[e + 1];
    if (xb - xa < 1e-300) continue;
    double Xm = 0.5 * (xa + xb);
    for (std::size_t i = 0; i < m; ++i) intercept[i] = br[i].beta * Xm + br[i].c;
    std::vector<int> active;
    std::vector<double> kinks;
    fiber_envelope(alpha, intercept, T1, active, kinks);
    double wint = weight_integral(xa, xb);
    for (std::size_t k = 0; k + 1 < active.size(); ++k) {
      const auto& lo = br[static_cast<std::size_t>(active[k])];
      const auto& hi = br[static_cast<std::size_t>(active[k + 1])];
      vol += (hi.alpha - lo.alpha) * 0.5 * (lo.beta + hi.beta) * wint;
      min_kink = std::min(min_kink, kinks[k]);
      max_kink = std::max(max_kink, kinks[k]);
    }
  }

  // Atoms at interior events: polygon of gradients active at the collision.
  for (std::size_t e = 1; e + 1 < events.size(); ++e) {
    double Xe = events[e];
    for (std::size_t i = 0; i < m; ++i) intercept[i] = br[i].beta * Xe + br[i].c;
    // find collision points: t1 values where >= 3 branches are active
    std::vector<double> cand;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        if (br[i].alpha == br[j].alpha) continue;
        double t1 = kink_at(i, j, Xe);
        if (t1 <= T1 + 1e-12) cand.push_back(t1);
      }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
               cand.end());
    for (double t1 : cand) {
      double best = -1e308;
      for (std::size_t i = 0; i < m; ++i) best = std::max(best, alpha[i] * t1 + intercept[i]);
      std::vector<std::array<double, 2>> grads;
      for (std::size_t i = 0; i < m; ++i)
        if (std::abs(alpha[i] * t1 + intercept[i] - best) < 1e-8 * std::max(1.0, std::abs(best)))
          grads.push_back({br[i].alpha, br[i].beta * Xe});
      if (grads.size() >= 3) {
        double area = hull_area_d(std::move(grads));
        double w = weightX ? (*weightX)(Xe) : 1.0;
        vol += area * w;
      }
    }
  }

  if (max_kink > -1e307) {
    std::ostringstream os;
    os << "kink t1 range [" << min_kink << ", " << max_kink << "]";
    res.flags.push_back(os.str());
  }
  res.vol = vol;
  return res;
}

double family_square_mass(const MaxFamily& F, double T1, double Xmax,
                          const std::function<double(double)>* weightX, std::vector<std::string>* flags) {
  auto r = family_subdiff_vol(F, T1, Xmax, weightX);
  if (flags) flags->insert(flags->end(), r.flags.begin(), r.flags.end());
  return 2.0 * r.vol;
}

double family_mixed_mass(const MaxFamily& F, double gamma, double T1, double Xmax,
                         const std::function<double(double)>* weightX, std::vector<std::string>* flags) {
  MaxFamily shifted = F;
  for (auto& b : shifted.branches) b.beta += gamma;
  auto rp = family_subdiff_vol(shifted, T1, Xmax, weightX);
  auto r0 = family_subdiff_vol(F, T1, Xmax, weightX);
  if (flags) flags->insert(flags->end(), rp.flags.begin(), rp.flags.end());
  // complex mixed mass = (1/2)[MA(F+g) - MA(F) - MA(g)], MA(g) = 0 (rank one)
  return rp.vol - r0.vol;
}

// --- radial energy --------------------------------------------------------------------

namespace {

// Identify the singular gauge profile: the PowerLog child or the affine/LSE
// part of a LogNorm; otherwise the profile itself.
TProfile gauge_of(const ConvexProfile& f) {
  const TProfile& r = f.root;
  if (r->kind == TNode::Kind::PowerLog) return r->kids[0];
  return r;
}

// Solve gauge(t1, t2_ref) = -depth for t1 by bisection (gauge nondecreasing
// in t1). Returns kNegCut if already above the cutoff everywhere.
double t1_cutoff(const TProfile& g, double depth, double t2ref) {
  double lo = kNegCut * 20, hi = 60.0;
  double t[2] = {lo, t2ref};
  if (tprofile_value(g, t) > -depth) return lo;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    t[0] = mid;
    if (tprofile_value(g, t) > -depth) hi = mid;
    else lo = mid;
  }
  return hi;
}

double energy_partial(const ConvexProfile& f, int j, double depth, const TBox& E, double tol) {
  QuadCtx ctx{&f, j};
  ctx.weight_abs_f = true;
  TProfile g = gauge_of(f);
  bool radial_gauge = true;
  {
    double ta[2] = {-5.0, -1.0}, tb[2] = {-5.0, -9.0};
    if (std::abs(tprofile_value(g, ta) - tprofile_value(g, tb)) > 1e-9) radial_gauge = false;
  }
  if (!radial_gauge) {
    // a bounded-below gauge saturates the mask; anything else is out of scope
    double deep[2] = {20 * kNegCut, 20 * kNegCut};
    if (!(tprofile_value(g, deep) > -depth))
      throw std::invalid_argument("radial_energy_integral: gauge must be radial in z1 or bounded");
  }
  double t2ref = -1.0;
  double lo0 = std::max(radial_gauge ? t1_cutoff(g, depth, t2ref) : -TBox::kInf,
                        std::max(E.lo[0], 20 * kNegCut));
  double hi0 = std::min(E.hi[0], 60.0);
  if (lo0 >= hi0) return 0.0;
  if (f.dim == 1) {
    return toric_calibration_constant(1) *
           adaptive_simpson([&](double t1) { return ctx.integrand(&t1); }, lo0, hi0, tol, 40, 8);
  }
  double lo1 = std::max(E.lo[1], kNegCut), hi1 = std::min(E.hi[1], 60.0);
  return toric_calibration_constant(2) *
         adaptive_simpson(
             [&](double t1) {
               return adaptive_simpson(
                   [&](double t2) {
                     double t[2] = {t1, t2};
                     return ctx.integrand(t);
                   },
                   lo1, hi1, tol * 0.1, 40, 6);
             },
             lo0, hi0, tol, 40, 8);
}

}  // namespace

RadialEnergyResult radial_energy_integral(const PshSpec& u, int j, double depth, const TBox& E, double tol) {
  ConvexProfile f = toric_profile(u, false);
  if (j < 0 || j > f.dim) throw std::invalid_argument("radial_energy_integral: j out of range");
  RadialEnergyResult r;
  double I4 = energy_partial(f, j, depth * 0.25, E, tol);
  double I2 = energy_partial(f, j, depth * 0.5, E, tol);
  double I1 = energy_partial(f, j, depth, E, tol);
  double d2 = I2 - I4, d1 = I1 - I2;
  double scale = std::max({1.0, std::abs(I1)});
  // Depth-doubling increments cancel any additive constant, so their ratio
  // is 2^p for a power-law tail; the reported exponent is log2 of it (also
  // meaningful for convergent tails, where it is negative).
  if (d1 > 1e-12 * scale && d2 > 1e-12 * scale) r.exponent = std::log2(d1 / d2);
  if (d1 > 1e-7 * scale && d2 > 1e-7 * scale && d1 / d2 > 1.05) {
    r.divergent = true;
    r.value = I1;
    r.err_est = d1;
    return r;
  }
  r.value = I1;
  if (d1 > 0 && d2 > d1) {
    double q = d1 / d2;  // < 1
    r.err_est = d1 * q / (1 - q);
  } else {
    r.err_est = std::abs(d1);
  }
  return r;
}

// --- divisor pairings --------------------------------------------------------------------

double divisor_bump_pairing(int axis, const TestForm& bump, const HMat& other_form) {
  if (bump.n != 2 || bump.shape != TestForm::Shape::Tensor)
    throw std::invalid_argument("divisor_bump_pairing: needs a tensor bump in C^2");
  int other = 1 - axis;
  // chi restricted to the divisor plane
  double chi_at_zero = bump.profiles[static_cast<std::size_t>(axis)].q(std::norm(bump.center[static_cast<std::size_t>(axis)]));
  const BumpProfile& prof = bump.profiles[static_cast<std::size_t>(other)];
  double radial = adaptive_simpson([&](double X) { return prof.q(X); }, 0.0, prof.b2, 1e-12);
  double coeff = other_form.at(other, other).real();
  return chi_at_zero * radial * coeff;
}

}  // namespace nppl
