#pragma once

// Deterministic pairwise-tree summation. The reduction order depends only on
// the element order, never on thread count, so identical inputs give
// bit-identical sums.

#include <cstddef>
#include <span>
#include <vector>

namespace nppl {

namespace detail {
inline double pairwise_sum_rec(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum_rec(x, half) + pairwise_sum_rec(x + half, n - half);
}
}  // namespace detail

inline double pairwise_sum(std::span<const double> x) {
  return detail::pairwise_sum_rec(x.data(), x.size());
}

inline double pairwise_sum(const std::vector<double>& x) {
  return detail::pairwise_sum_rec(x.data(), x.size());
}

}  // namespace nppl
