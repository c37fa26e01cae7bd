#pragma once

// Exact-rational stencil backend. Ground truth for the float solver on
// rational node sets; doubles convert losslessly, so any double node set is
// admissible. Kept in its own header: boost::multiprecision is heavy and only
// test code and the weights CLI want exactness.

#include <cstddef>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "taylor_learn/errors.hpp"

namespace taylor_learn {

using Rational = boost::multiprecision::cpp_rational;

inline std::vector<Rational> fd_weights_exact(const std::vector<Rational>& nodes, int order,
                                              const Rational& point) {
  const std::size_t n = nodes.size();
  if (n == 0) throw degenerate_stencil_error("empty node set");
  if (order < 0 || static_cast<std::size_t>(order) >= n)
    throw degenerate_stencil_error("order out of range for node count");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (nodes[i] == nodes[j]) throw degenerate_stencil_error("duplicate nodes in exact solve");

  // Moment system sum_j a_j (x_j - p)^m = n! [m == order], eliminated exactly.
  std::vector<Rational> a(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const Rational t = nodes[j] - point;
    Rational pw = 1;
    for (std::size_t m = 0; m < n; ++m) {
      a[m * n + j] = pw;
      pw *= t;
    }
  }
  std::vector<Rational> rhs(n, Rational(0));
  Rational fact = 1;
  for (int i = 2; i <= order; ++i) fact *= i;
  rhs[static_cast<std::size_t>(order)] = fact;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot * n + col] == 0) ++pivot;
    if (pivot == n) throw degenerate_stencil_error("singular exact moment system");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(rhs[col], rhs[pivot]);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r * n + col] == 0) continue;
      const Rational factor = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
      rhs[r] -= factor * rhs[col];
    }
  }
  std::vector<Rational> w(n);
  for (std::size_t r = 0; r < n; ++r) w[r] = rhs[r] / a[r * n + r];
  return w;
}

inline std::vector<Rational> fd_weights_exact(const std::vector<double>& nodes, int order, double point) {
  std::vector<Rational> rn(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) rn[i] = Rational(nodes[i]);
  return fd_weights_exact(rn, order, Rational(point));
}

}  // namespace taylor_learn
