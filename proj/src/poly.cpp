#include "nppl/poly.hpp"

#include <cctype>
#include <sstream>

namespace nppl {

std::string Poly::to_string(const std::string& var, int index_base) const {
  if (terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto& [e, c] : terms) {
    if (!first) os << " + ";
    first = false;
    bool unit = (c == complexd(1.0));
    bool has_vars = false;
    for (int j = 0; j < nvars; ++j) has_vars = has_vars || e[static_cast<std::size_t>(j)] > 0;
    if (!unit || !has_vars) {
      if (c.imag() == 0.0) os << c.real();
      else os << "(" << c.real() << (c.imag() >= 0 ? "+" : "") << c.imag() << "i)";
      if (has_vars) os << "*";
    }
    bool firstv = true;
    for (int j = 0; j < nvars; ++j) {
      int k = e[static_cast<std::size_t>(j)];
      if (k == 0) continue;
      if (!firstv) os << "*";
      firstv = false;
      os << var << (j + index_base);
      if (k > 1) os << "^" << k;
    }
  }
  return os.str();
}

namespace {

struct PolyParser {
  const std::string& text;
  std::size_t pos = 0;
  int nvars;
  std::string var;
  int index_base;

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("poly parse error at position " + std::to_string(pos) + ": " + msg);
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  Poly parse_expr() {
    Poly r = parse_term();
    while (true) {
      if (eat('+')) r = r + parse_term();
      else if (eat('-')) r = r - parse_term();
      else return r;
    }
  }

  Poly parse_term() {
    Poly r = parse_power();
    while (true) {
      skip_ws();
      if (eat('*')) r = r * parse_power();
      else return r;
    }
  }

  Poly parse_power() {
    Poly base = parse_atom();
    if (eat('^')) {
      int k = parse_int();
      return base.pow(k);
    }
    return base;
  }

  int parse_int() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) fail("expected integer");
    return std::stoi(text.substr(start, pos - start));
  }

  Poly parse_atom() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    char c = text[pos];
    if (c == '(') {
      ++pos;
      Poly r = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return r;
    }
    if (c == '-') {
      ++pos;
      return Poly::constant(nvars, -1.0) * parse_atom();
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      int k = parse_int();
      if (pos < text.size() && text[pos] == 'i') {
        ++pos;
        return Poly::constant(nvars, complexd(0.0, k));
      }
      return Poly::constant(nvars, k);
    }
    if (c == 'i' && (pos + 1 >= text.size() || !std::isalnum(static_cast<unsigned char>(text[pos + 1])))) {
      ++pos;
      return Poly::constant(nvars, complexd(0.0, 1.0));
    }
    // variable: <var><index>
    if (text.compare(pos, var.size(), var) == 0) {
      pos += var.size();
      int idx = parse_int();
      int j = idx - index_base;
      if (j < 0 || j >= nvars) fail("variable index out of range: " + var + std::to_string(idx));
      return Poly::variable(nvars, j);
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

Poly parse_poly(const std::string& text, int nvars, const std::string& var, int index_base) {
  PolyParser p{text, 0, nvars, var, index_base};
  Poly r = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return r;
}

}  // namespace nppl
