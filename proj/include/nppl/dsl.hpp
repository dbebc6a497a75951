#pragma once

// Tiny text DSL for catalog functions.
//
//   expr   := ['-'] term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := number | 'log' '(' expr ')' | 'abs2' '(' poly ')'
//           | 'sq' '(' poly ')' | 'pow' '(' expr ',' number ')'
//           | 'max' '(' expr ',' expr ')' | 'smax' '(' expr ',' expr ',' number ')'
//           | '(' expr ')'
//   poly   := complex polynomial in z1..zn, integer coefficients, '^'
//
// sq(p) is shorthand for abs2(p). Parse errors carry position and
// expected-token information. -(pow(-log(abs2(f)), eps)) with eps in (0,1)
// is recognized structurally as the PowerLog family.

#include <string>

#include "nppl/psh.hpp"

namespace nppl {

struct DslError : std::invalid_argument {
  std::size_t position;
  DslError(std::size_t pos, const std::string& msg)
      : std::invalid_argument("DSL parse error at position " + std::to_string(pos) + ": " + msg),
        position(pos) {}
};

PshSpec parse_psh(const std::string& text, int n);

}  // namespace nppl
