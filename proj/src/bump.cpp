#include "nppl/bump.hpp"

namespace nppl {

TestFormDdc test_form_ddc(const TestForm& xi, const GridDomain& d) {
  if (xi.n != d.n) throw std::invalid_argument("test_form_ddc: dimension mismatch");
  if (xi.degree < 1 || xi.degree > d.n) throw std::invalid_argument("test_form_ddc: bad pairing degree");
  if (!xi.supported_inside(d)) throw std::invalid_argument("test_form_ddc: support touches the boundary ring");
  TestFormDdc out;
  out.ddc_chi = HermitianFormField(d);
  const std::size_t m = d.cell_count();
  for (std::size_t c = 0; c < m; ++c) {
    Jet2 j = xi.chi_jet(d.point(c));
    out.ddc_chi.matrices[c] = j.h;
  }
  out.power = power_matrices(xi);
  return out;
}

}  // namespace nppl
