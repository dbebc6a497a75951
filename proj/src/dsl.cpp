#include "nppl/dsl.hpp"

#include <cctype>
#include <cmath>

namespace nppl {

namespace {

// Collapse sum-of-sums introduced by '+'/'-' chains so the toric classifier
// and JSON stay canonical.
PshSpec flatten_sums(const PshSpec& s) {
  if (s->kind != PshNode::Kind::Sum) return s;
  std::vector<double> coeffs;
  std::vector<PshSpec> kids;
  bool changed = false;
  for (std::size_t i = 0; i < s->kids.size(); ++i) {
    PshSpec k = flatten_sums(s->kids[i]);
    if (k->kind == PshNode::Kind::Sum) {
      changed = true;
      for (std::size_t m = 0; m < k->kids.size(); ++m) {
        coeffs.push_back(s->coeffs[i] * k->coeffs[m]);
        kids.push_back(k->kids[m]);
      }
    } else {
      coeffs.push_back(s->coeffs[i]);
      kids.push_back(k);
    }
  }
  if (!changed) return s;
  return psh_sum(std::move(coeffs), std::move(kids));
}

struct Parser {
  const std::string& text;
  std::size_t pos = 0;
  int n;

  [[noreturn]] void fail(const std::string& expected) const { throw DslError(pos, expected); }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) { ++pos; return true; }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  bool peek_ident(const std::string& id) {
    skip_ws();
    if (text.compare(pos, id.size(), id) != 0) return false;
    std::size_t end = pos + id.size();
    if (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_')) return false;
    return true;
  }

  bool eat_ident(const std::string& id) {
    if (!peek_ident(id)) return false;
    pos += id.size();
    return true;
  }

  double parse_number() {
    skip_ws();
    std::size_t start = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    bool any = false;
    while (pos < text.size() && (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
      ++pos;
      any = true;
    }
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      ++pos;
      if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    if (!any) fail("expected number");
    return std::stod(text.substr(start, pos - start));
  }

  // Reads a polynomial argument up to the matching close paren / comma.
  Poly parse_poly_arg() {
    skip_ws();
    std::size_t start = pos;
    int depth = 0;
    while (pos < text.size()) {
      char c = text[pos];
      if (c == '(') ++depth;
      else if (c == ')') {
        if (depth == 0) break;
        --depth;
      } else if (c == ',' && depth == 0) break;
      ++pos;
    }
    std::string body = text.substr(start, pos - start);
    try {
      return parse_poly(body, n);
    } catch (const std::invalid_argument& e) {
      throw DslError(start, e.what());
    }
  }

  PshSpec parse_expr() {
    bool neg = eat('-');
    PshSpec r = parse_term();
    if (neg) r = psh_sum({-1.0}, {r});
    while (true) {
      if (eat('+')) r = psh_sum({1.0, 1.0}, {r, parse_term()});
      else if (eat('-')) r = psh_sum({1.0, -1.0}, {r, parse_term()});
      else return r;
    }
  }

  PshSpec parse_term() {
    PshSpec r = parse_factor();
    while (eat('*')) r = psh_prod(r, parse_factor());
    return r;
  }

  PshSpec parse_factor() {
    skip_ws();
    if (pos >= text.size()) fail("expected factor");
    if (eat_ident("log")) {
      expect('(');
      PshSpec inner = parse_expr();
      expect(')');
      return make_log(inner);
    }
    if (eat_ident("abs2") || eat_ident("sq")) {
      expect('(');
      Poly p = parse_poly_arg();
      expect(')');
      return psh_abs2(PolyTuple({p}));
    }
    if (eat_ident("pow")) {
      expect('(');
      PshSpec base = parse_expr();
      expect(',');
      double e = parse_number();
      expect(')');
      return lower_pow(base, e);
    }
    if (eat_ident("max")) {
      expect('(');
      PshSpec a = parse_expr();
      expect(',');
      PshSpec b = parse_expr();
      expect(')');
      return psh_max(a, b);
    }
    if (eat_ident("smax")) {
      expect('(');
      PshSpec a = parse_expr();
      expect(',');
      PshSpec b = parse_expr();
      expect(',');
      double d = parse_number();
      expect(')');
      return psh_smax(a, b, d);
    }
    if (eat('(')) {
      PshSpec r = parse_expr();
      expect(')');
      return r;
    }
    char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') {
      return psh_const(n, parse_number());
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos;
      while (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_')) ++end;
      fail("unknown identifier '" + text.substr(pos, end - pos) + "'");
    }
    fail("expected factor");
  }

  // log over a positive combination of abs2's folds into a single tuple:
  // sum c_m |f_m|^2 = |(sqrt(c_m) f_m)|^2, so log of it is the LogNorm shape.
  PshSpec make_log(const PshSpec& inner) {
    PshSpec flat = flatten_sums(inner);
    if (flat->kind == PshNode::Kind::Abs2) return psh_log(flat);
    if (flat->kind == PshNode::Kind::Sum) {
      bool all_abs2 = true;
      for (std::size_t i = 0; i < flat->kids.size(); ++i)
        all_abs2 = all_abs2 && flat->kids[i]->kind == PshNode::Kind::Abs2 && flat->coeffs[i] > 0.0;
      if (all_abs2) {
        std::vector<Poly> polys;
        for (std::size_t i = 0; i < flat->kids.size(); ++i) {
          double s = std::sqrt(flat->coeffs[i]);
          for (auto& p : flat->kids[i]->polys.f) {
            Poly q = Poly::constant(p.nvars, s) * p;
            polys.push_back(q);
          }
        }
        return psh_log(psh_abs2(PolyTuple(std::move(polys))));
      }
    }
    return psh_log(flat);
  }

  // pow over -log(abs2(f)) with exponent in (0,1) is the PowerLog family;
  // any other negative-base pow is rejected at parse time.
  PshSpec lower_pow(const PshSpec& base, double e) {
    // match: Sum(-1 * Log(Abs2 f))
    if (base->kind == PshNode::Kind::Sum && base->kids.size() == 1 && base->coeffs[0] == -1.0 &&
        base->kids[0]->kind == PshNode::Kind::Log && base->kids[0]->kids[0]->kind == PshNode::Kind::Abs2) {
      if (!(e > 0.0 && e < 1.0)) fail("PowerLog exponent outside (0,1)");
      // Caller applies the leading minus; return +(-log|f|^2)^eps here.
      return psh_sum({-1.0}, {power_log(e, base->kids[0]->kids[0]->polys)});
    }
    return psh_pow(base, e);
  }
};

}  // namespace

PshSpec parse_psh(const std::string& text, int n) {
  Parser p{text, 0, n};
  PshSpec r = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return flatten_sums(r);
}

}  // namespace nppl
