#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "taylor_learn/errors.hpp"

namespace taylor_learn {

// Two nodes closer than this fraction of the stencil spread count as one
// evaluation point. Atoms in the sampling distribution produce exact ties,
// so callers must dedup against the same threshold before solving.
inline constexpr double kDuplicateNodeRelTol = 1e-12;

// Weights a_j with sum_j a_j (x_j - p)^m = n! [m == n] for m = 0..k, i.e. the
// unique stencil that reproduces d^n/dx^n at p exactly on polynomials of
// degree <= k. condition_estimate is the infinity-norm condition number of
// the centered-and-scaled moment matrix; raw (unscaled) Vandermonde systems
// on clustered sample nodes are hopeless, the scaled number is the one worth
// gating on.
struct WeightTable {
  std::vector<double> nodes;
  int order = 0;
  double point = 0.0;
  std::vector<double> weights;
  double condition_estimate = 1.0;
};

namespace detail {

// Dense LU with partial pivoting; enough for the (k+1)x(k+1) moment systems
// this library ever sees (k <= 64).
class LuFactors {
 public:
  explicit LuFactors(std::vector<double> a, std::size_t n) : a_(std::move(a)), n_(n), piv_(n) {
    std::iota(piv_.begin(), piv_.end(), std::size_t{0});
    for (std::size_t col = 0; col < n_; ++col) {
      std::size_t best = col;
      double best_mag = std::abs(at(col, col));
      for (std::size_t r = col + 1; r < n_; ++r) {
        const double mag = std::abs(at(r, col));
        if (mag > best_mag) {
          best = r;
          best_mag = mag;
        }
      }
      if (best_mag == 0.0) throw degenerate_stencil_error("singular moment system");
      if (best != col) {
        for (std::size_t c = 0; c < n_; ++c) std::swap(at(col, c), at(best, c));
        std::swap(piv_[col], piv_[best]);
      }
      for (std::size_t r = col + 1; r < n_; ++r) {
        const double factor = at(r, col) / at(col, col);
        at(r, col) = factor;
        for (std::size_t c = col + 1; c < n_; ++c) at(r, c) -= factor * at(col, c);
      }
    }
  }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    std::vector<double> x(n_);
    for (std::size_t r = 0; r < n_; ++r) x[r] = rhs[piv_[r]];
    for (std::size_t r = 1; r < n_; ++r)
      for (std::size_t c = 0; c < r; ++c) x[r] -= at(r, c) * x[c];
    for (std::size_t r = n_; r-- > 0;) {
      for (std::size_t c = r + 1; c < n_; ++c) x[r] -= at(r, c) * x[c];
      x[r] /= at(r, r);
    }
    return x;
  }

 private:
  double& at(std::size_t r, std::size_t c) { return a_[r * n_ + c]; }
  double at(std::size_t r, std::size_t c) const { return a_[r * n_ + c]; }

  std::vector<double> a_;
  std::size_t n_;
  std::vector<std::size_t> piv_;
};

inline double inf_norm(const std::vector<double>& a, std::size_t n) {
  double norm = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < n; ++c) row += std::abs(a[r * n + c]);
    norm = std::max(norm, row);
  }
  return norm;
}

}  // namespace detail

inline void check_nodes_distinct(const std::vector<double>& nodes) {
  if (nodes.size() < 2) return;
  std::vector<double> sorted(nodes);
  std::sort(sorted.begin(), sorted.end());
  const double spread = sorted.back() - sorted.front();
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] <= kDuplicateNodeRelTol * spread) {
      throw degenerate_stencil_error("duplicate nodes: gap " + std::to_string(sorted[i] - sorted[i - 1]) +
                                     " below " + std::to_string(kDuplicateNodeRelTol) + " of spread " +
                                     std::to_string(spread));
    }
  }
}

inline WeightTable fd_weights(const std::vector<double>& nodes, int order, double point) {
  if (nodes.empty()) throw degenerate_stencil_error("empty node set");
  if (order < 0) throw config_error("derivative order must be nonnegative");
  const std::size_t n = nodes.size();
  if (static_cast<std::size_t>(order) >= n) {
    throw degenerate_stencil_error("order " + std::to_string(order) + " needs at least " +
                                   std::to_string(order + 1) + " nodes, got " + std::to_string(n));
  }
  check_nodes_distinct(nodes);

  // Center at the evaluation point, scale by the spread, solve, unscale.
  std::vector<double> t(n);
  for (std::size_t j = 0; j < n; ++j) t[j] = nodes[j] - point;
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  double scale = *tmax - *tmin;
  if (scale == 0.0) scale = 1.0;  // single node

  std::vector<double> a(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = t[j] / scale;
    double pw = 1.0;
    for (std::size_t m = 0; m < n; ++m) {
      a[m * n + j] = pw;
      pw *= u;
    }
  }
  std::vector<double> rhs(n, 0.0);
  double fact = 1.0;
  for (int i = 2; i <= order; ++i) fact *= i;
  rhs[static_cast<std::size_t>(order)] = fact;

  detail::LuFactors lu(a, n);
  std::vector<double> w = lu.solve(rhs);

  // One step of iterative refinement with a long double residual; buys back
  // most of the digits the elimination loses on poorly spread nodes.
  {
    std::vector<double> r(n);
    for (std::size_t m = 0; m < n; ++m) {
      long double acc = static_cast<long double>(rhs[m]);
      for (std::size_t j = 0; j < n; ++j) acc -= static_cast<long double>(a[m * n + j]) * w[j];
      r[m] = static_cast<double>(acc);
    }
    const std::vector<double> dw = lu.solve(r);
    for (std::size_t j = 0; j < n; ++j) w[j] += dw[j];
  }

  // kappa_inf(A) from explicit columns of A^{-1}; cheap at these sizes and
  // accurate enough for a gate.
  double inv_norm = 0.0;
  {
    std::vector<double> abs_inv_row(n, 0.0);
    std::vector<double> e(n, 0.0);
    for (std::size_t col = 0; col < n; ++col) {
      e[col] = 1.0;
      const std::vector<double> x = lu.solve(e);
      e[col] = 0.0;
      for (std::size_t rr = 0; rr < n; ++rr) abs_inv_row[rr] += std::abs(x[rr]);
    }
    inv_norm = *std::max_element(abs_inv_row.begin(), abs_inv_row.end());
  }
  const double cond = std::max(1.0, detail::inf_norm(a, n) * inv_norm);

  const double unscale = std::pow(scale, order);
  for (double& wj : w) wj /= unscale;

  WeightTable table;
  table.nodes = nodes;
  table.order = order;
  table.point = point;
  table.weights = std::move(w);
  table.condition_estimate = cond;
  return table;
}

inline double apply_weights(const WeightTable& table, const std::vector<double>& values) {
  if (values.size() != table.weights.size())
    throw config_error("value count does not match stencil size");
  double acc = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) acc += table.weights[j] * values[j];
  return acc;
}

// Lemma-3 estimator: f^(n)(p) ~= sum_j a_j y_j on the sampled nodes.
inline double estimate_derivative(const std::vector<double>& nodes, const std::vector<double>& values,
                                  int order, double point) {
  if (nodes.size() != values.size()) throw config_error("nodes/values size mismatch");
  return apply_weights(fd_weights(nodes, order, point), values);
}

// Formal accuracy order of a (k+1)-node stencil for the n-th derivative on
// well-spread nodes: p = k+1-n.
inline int accuracy_order(int node_count, int order) {
  if (node_count <= order) throw config_error("accuracy_order requires node_count > order");
  return node_count - order;
}

}  // namespace taylor_learn
