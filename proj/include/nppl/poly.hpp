#pragma once

// Multivariate complex polynomials in up to four variables (z1..z3 locally;
// x0..x3 homogeneous on P^n). Exact evaluation and differentiation; these
// carry the holomorphic tuples f of the catalog.

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nppl/linalg.hpp"

namespace nppl {

inline constexpr int kMaxVars = 4;

struct Poly {
  int nvars = 0;
  // exponent tuple -> coefficient; kept sorted for canonical serialization
  std::map<std::array<int, kMaxVars>, complexd> terms;

  Poly() = default;
  explicit Poly(int nv) : nvars(nv) {}

  static Poly constant(int nv, complexd c) {
    Poly p(nv);
    if (c != complexd(0.0)) p.terms[{0, 0, 0, 0}] = c;
    return p;
  }

  static Poly variable(int nv, int j) {
    Poly p(nv);
    std::array<int, kMaxVars> e{};
    e[static_cast<std::size_t>(j)] = 1;
    p.terms[e] = 1.0;
    return p;
  }

  bool is_zero() const { return terms.empty(); }

  void add_term(std::array<int, kMaxVars> e, complexd c) {
    auto it = terms.find(e);
    if (it == terms.end()) {
      if (c != complexd(0.0)) terms[e] = c;
    } else {
      it->second += c;
      if (it->second == complexd(0.0)) terms.erase(it);
    }
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    Poly r = a;
    for (auto& [e, c] : b.terms) r.add_term(e, c);
    return r;
  }

  friend Poly operator-(const Poly& a, const Poly& b) {
    Poly r = a;
    for (auto& [e, c] : b.terms) r.add_term(e, -c);
    return r;
  }

  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly r(a.nvars);
    for (auto& [ea, ca] : a.terms)
      for (auto& [eb, cb] : b.terms) {
        std::array<int, kMaxVars> e{};
        for (int i = 0; i < kMaxVars; ++i) e[static_cast<std::size_t>(i)] = ea[static_cast<std::size_t>(i)] + eb[static_cast<std::size_t>(i)];
        r.add_term(e, ca * cb);
      }
    return r;
  }

  Poly pow(int k) const {
    if (k < 0) throw std::invalid_argument("Poly::pow: negative exponent");
    Poly r = constant(nvars, 1.0);
    Poly base = *this;
    while (k > 0) {
      if (k & 1) r = r * base;
      base = base * base;
      k >>= 1;
    }
    return r;
  }

  Poly derivative(int j) const {
    Poly r(nvars);
    for (auto& [e, c] : terms) {
      int k = e[static_cast<std::size_t>(j)];
      if (k == 0) continue;
      std::array<int, kMaxVars> e2 = e;
      e2[static_cast<std::size_t>(j)] = k - 1;
      r.add_term(e2, c * static_cast<double>(k));
    }
    return r;
  }

  complexd eval(const complexd* z) const {
    complexd acc = 0.0;
    for (auto& [e, c] : terms) {
      complexd t = c;
      for (int j = 0; j < nvars; ++j)
        for (int k = 0; k < e[static_cast<std::size_t>(j)]; ++k) t *= z[static_cast<std::size_t>(j)];
      acc += t;
    }
    return acc;
  }

  int degree() const {
    int d = 0;
    for (auto& [e, c] : terms) {
      int s = 0;
      for (int j = 0; j < nvars; ++j) s += e[static_cast<std::size_t>(j)];
      d = std::max(d, s);
    }
    return d;
  }

  bool is_homogeneous(int* deg_out = nullptr) const {
    int d = -1;
    for (auto& [e, c] : terms) {
      int s = 0;
      for (int j = 0; j < kMaxVars; ++j) s += e[static_cast<std::size_t>(j)];
      if (d < 0) d = s;
      else if (s != d) return false;
    }
    if (deg_out) *deg_out = std::max(d, 0);
    return true;
  }

  // True if the polynomial is a single monomial c * prod z_j^{a_j}.
  bool is_monomial(std::array<int, kMaxVars>* exps = nullptr, complexd* coeff = nullptr) const {
    if (terms.size() != 1) return false;
    if (exps) *exps = terms.begin()->first;
    if (coeff) *coeff = terms.begin()->second;
    return true;
  }

  // Substitute variable i := 1 and renumber remaining variables in order
  // (homogeneous -> affine chart).
  Poly dehomogenize(int i) const {
    Poly r(nvars - 1);
    for (auto& [e, c] : terms) {
      std::array<int, kMaxVars> e2{};
      int t = 0;
      for (int j = 0; j < nvars; ++j) {
        if (j == i) continue;
        e2[static_cast<std::size_t>(t++)] = e[static_cast<std::size_t>(j)];
      }
      r.add_term(e2, c);
    }
    return r;
  }

  std::string to_string(const std::string& var = "z", int index_base = 1) const;
};

// A holomorphic tuple f = (f_1, ..., f_m) with |f|^2 = sum |f_i|^2, together
// with precomputed partial derivatives.
struct PolyTuple {
  int nvars = 0;
  std::vector<Poly> f;
  std::vector<std::array<Poly, kMaxVars>> df;  // df[m][j] = d f_m / d z_j

  PolyTuple() = default;
  explicit PolyTuple(std::vector<Poly> polys) : f(std::move(polys)) {
    if (f.empty()) throw std::invalid_argument("PolyTuple: empty tuple");
    nvars = f[0].nvars;
    for (auto& p : f)
      if (p.nvars != nvars) throw std::invalid_argument("PolyTuple: mixed arity");
    df.resize(f.size());
    for (std::size_t m = 0; m < f.size(); ++m)
      for (int j = 0; j < nvars; ++j) df[m][static_cast<std::size_t>(j)] = f[m].derivative(j);
  }

  std::size_t size() const { return f.size(); }
};

// Parse a polynomial expression in variables named <var>1..<var>n (or x0..xn
// when index_base == 0), with integer or Gaussian-integer coefficients,
// '+', '-', '*', '^' and parentheses.
Poly parse_poly(const std::string& text, int nvars, const std::string& var = "z", int index_base = 1);

}  // namespace nppl
