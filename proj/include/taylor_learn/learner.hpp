#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "taylor_learn/dist.hpp"
#include "taylor_learn/errors.hpp"
#include "taylor_learn/fd_weights.hpp"
#include "taylor_learn/model.hpp"

namespace taylor_learn {

struct LearnerConfig {
  int degree = 3;                    // N: degree of the fitted polynomial
  int m_per_order = 0;               // nodes per derivative order; 0 = default N+2
  double h_max = 1.0;                // initial window half-width
  double h_shrink = 0.5;             // geometric window shrink factor
  double cond_max = 1e10;            // conditioning gate for a stencil
  std::optional<double> p_override;  // fixed expansion point, if any

  int nodes_per_order() const { return m_per_order > 0 ? m_per_order : degree + 2; }

  void validate() const {
    if (degree < 0) throw config_error("degree must be nonnegative");
    if (degree > kMaxDerivativeOrder) throw capability_error("degree beyond supported derivative cap");
    if (nodes_per_order() < degree + 1) throw config_error("m_per_order must be at least N+1");
    if (!(h_max > 0.0)) throw config_error("h_max must be positive");
    if (!(h_shrink > 0.0 && h_shrink < 1.0)) throw config_error("h_shrink must lie in (0,1)");
    if (!(cond_max >= 1.0)) throw config_error("cond_max must be >= 1");
  }
};

inline LearnerConfig learner_config_from_json(const nlohmann::json& j) {
  LearnerConfig cfg;
  try {
    cfg.degree = j.at("N").get<int>();
    if (j.contains("m_per_order")) cfg.m_per_order = j.at("m_per_order").get<int>();
    if (j.contains("h_max")) cfg.h_max = j.at("h_max").get<double>();
    if (j.contains("h_shrink")) cfg.h_shrink = j.at("h_shrink").get<double>();
    if (j.contains("cond_max")) cfg.cond_max = j.at("cond_max").get<double>();
    if (j.contains("p_override") && !j.at("p_override").is_null())
      cfg.p_override = j.at("p_override").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad learner config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json learner_config_to_json(const LearnerConfig& cfg) {
  nlohmann::json j{{"N", cfg.degree},        {"m_per_order", cfg.nodes_per_order()},
                   {"h_max", cfg.h_max},     {"h_shrink", cfg.h_shrink},
                   {"cond_max", cfg.cond_max}};
  if (cfg.p_override) j["p_override"] = *cfg.p_override;
  return j;
}

// The constructive side of the density-point lemma, run on empirical mass:
// bisect [min, max], keep whichever half holds at least half the points
// currently in play (ties go left), stop once fewer than 8 points remain in
// the interval or its width has collapsed by 1e9. Every dyadic ancestor of
// the result then holds a guaranteed fraction of the sample.
inline double find_density_point(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("find_density_point: empty sample");
  double lo = xs[0], hi = xs[0];
  for (double x : xs) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (lo == hi) return lo;
  const double initial_width = hi - lo;
  std::size_t inside = xs.size();
  while (inside >= 8 && (hi - lo) >= 1e-9 * initial_width) {
    const double mid = 0.5 * (lo + hi);
    std::size_t left = 0, right = 0;
    for (double x : xs) {
      if (x < lo || x > hi) continue;
      if (x <= mid) ++left;
      else ++right;
    }
    if (left >= right) {
      hi = mid;
      inside = left;
    } else {
      lo = mid;
      inside = right;
    }
    if (lo == hi) break;  // an atom pinched the interval
  }
  return 0.5 * (lo + hi);
}

// Exact log of BinomialCDF(m-1; M, gamma) = P(fewer than m successes in M),
// summed in log space.
inline double log_binomial_cdf_below(int m, std::uint64_t M, double gamma) {
  if (gamma >= 1.0) return static_cast<std::uint64_t>(m) > M ? 0.0 : -std::numeric_limits<double>::infinity();
  if (gamma <= 0.0) return 0.0;
  if (static_cast<std::uint64_t>(m) > M) return 0.0;
  const double lg = std::log(gamma), l1g = std::log1p(-gamma);
  const double lgM = std::lgamma(static_cast<double>(M) + 1.0);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double lc = lgM - std::lgamma(static_cast<double>(j) + 1.0) -
                      std::lgamma(static_cast<double>(M - j) + 1.0);
    terms[static_cast<std::size_t>(j)] = lc + j * lg + static_cast<double>(M - j) * l1g;
    max_term = std::max(max_term, terms[static_cast<std::size_t>(j)]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

// Lemma-1 inversion: minimal M with P(fewer than m of M draws land in the
// window) < delta, where gamma is the window mass. Doubling bracket plus
// binary search against the exact CDF; minimality means the CDF at M-1 is
// still >= delta.
inline std::uint64_t required_samples(double gamma, int m, double delta) {
  if (!(gamma > 0.0)) throw capability_error("required_samples: window has zero mass, no guarantee exists");
  if (gamma > 1.0) throw config_error("gamma must lie in (0,1]");
  if (m < 1) throw config_error("m must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw config_error("delta must lie in (0,1)");
  const double log_delta = std::log(delta);
  auto below = [&](std::uint64_t M) { return log_binomial_cdf_below(m, M, gamma) < log_delta; };

  std::uint64_t hi = static_cast<std::uint64_t>(m);
  const std::uint64_t cap = 1ULL << 40;
  while (!below(hi)) {
    hi *= 2;
    if (hi > cap) throw capability_error("required_samples: search exceeded 2^40 draws");
  }
  std::uint64_t lo = hi / 2;  // CDF at lo is >= delta (or lo < m)
  while (lo + 1 < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (below(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

// Window selection outcome; a shortfall is a signalled state, not an error,
// because fit's escalation loop consumes it.
struct NodeSelection {
  std::vector<double> nodes;  // ordered by |x - p|, ties toward smaller x
  std::size_t requested = 0;

  bool shortfall() const { return nodes.size() < requested; }
};

namespace detail {

// Nearest-m scan over a sorted array restricted to the open window
// (p-h, p+h), deduplicating under the stencil spread policy. Emits indices in
// increasing |x - p| with ties resolved toward the smaller value, which is
// exactly the order select_nodes() documents.
inline std::vector<std::size_t> nearest_in_window(const std::vector<double>& sorted_xs, double p,
                                                  std::size_t m, double h) {
  std::vector<std::size_t> picked;
  const auto begin_it = std::upper_bound(sorted_xs.begin(), sorted_xs.end(), p - h);
  const auto end_it = std::lower_bound(sorted_xs.begin(), sorted_xs.end(), p + h);
  if (begin_it >= end_it) return picked;
  const std::size_t wlo = static_cast<std::size_t>(begin_it - sorted_xs.begin());
  const std::size_t whi = static_cast<std::size_t>(end_it - sorted_xs.begin());  // exclusive
  const double tol = kDuplicateNodeRelTol * (sorted_xs[whi - 1] - sorted_xs[wlo]);

  std::size_t right = static_cast<std::size_t>(
      std::lower_bound(sorted_xs.begin() + static_cast<std::ptrdiff_t>(wlo),
                       sorted_xs.begin() + static_cast<std::ptrdiff_t>(whi), p) -
      sorted_xs.begin());
  std::size_t left = right;  // left side uses index-1
  while (picked.size() < m) {
    const bool has_left = left > wlo;
    const bool has_right = right < whi;
    if (!has_left && !has_right) break;
    const double dl = has_left ? p - sorted_xs[left - 1] : std::numeric_limits<double>::infinity();
    const double dr = has_right ? sorted_xs[right] - p : std::numeric_limits<double>::infinity();
    std::size_t idx;
    if (dl <= dr) {
      idx = --left;
    } else {
      idx = right++;
    }
    bool dup = false;
    for (std::size_t s : picked) {
      if (std::abs(sorted_xs[idx] - sorted_xs[s]) <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) picked.push_back(idx);
  }
  return picked;
}

inline std::size_t count_distinct(std::vector<double> xs) {
  if (xs.empty()) return 0;
  std::sort(xs.begin(), xs.end());
  const double tol = kDuplicateNodeRelTol * (xs.back() - xs.front());
  std::size_t distinct = 1;
  double last = xs.front();
  for (double x : xs) {
    if (x - last > tol) {
      ++distinct;
      last = x;
    }
  }
  return distinct;
}

}  // namespace detail

// The m points of xs inside the open window (p-h, p+h) closest to p,
// deduplicated so the result is always stencil-admissible. Fewer than m
// returned nodes is the signalled shortfall.
inline NodeSelection select_nodes(const std::vector<double>& xs, double p, std::size_t m, double h) {
  if (m == 0) throw config_error("select_nodes: m must be positive");
  NodeSelection sel;
  sel.requested = m;
  std::vector<double> sorted(xs);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t idx : detail::nearest_in_window(sorted, p, m, h)) sel.nodes.push_back(sorted[idx]);
  return sel;
}

// Taylor learning. Finds (or accepts) the expansion point, estimates each
// derivative 0..N from a stencil on the nearest in-window samples, divides by
// j!, and returns the polynomial. The window shrinks geometrically only while
// the stencil fails the conditioning gate; if no window ever passes, the
// best-conditioned estimate seen is kept and flagged in the diagnostics.
// fit never resamples; escalating M is the harness's job.
inline PolynomialModel fit(const LabeledDataset& data, const LearnerConfig& cfg) {
  cfg.validate();
  if (data.xs.empty()) throw insufficient_data_error("fit: empty dataset");
  if (data.xs.size() != data.ys.size()) throw config_error("fit: xs/ys size mismatch");
  const int N = cfg.degree;
  const std::size_t m = static_cast<std::size_t>(cfg.nodes_per_order());

  const double p = cfg.p_override ? *cfg.p_override : find_density_point(data.xs);

  const std::size_t distinct = detail::count_distinct(data.xs);
  if (distinct < static_cast<std::size_t>(N) + 1) {
    std::ostringstream os;
    os << "fit: need " << (N + 1) << " distinct x values, dataset has " << distinct;
    throw insufficient_data_error(os.str());
  }

  // Sort points once; label lookups ride along with the nodes.
  std::vector<std::size_t> perm(data.xs.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return data.xs[a] < data.xs[b]; });
  std::vector<double> sx(perm.size()), sy(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    sx[i] = data.xs[perm[i]];
    sy[i] = data.ys[perm[i]];
  }

  PolynomialModel model;
  model.expansion_point = p;
  model.coefficients.resize(static_cast<std::size_t>(N) + 1);
  model.diagnostics.resize(static_cast<std::size_t>(N) + 1);

  std::vector<std::string> shortfalls;
  double fact = 1.0;
  for (int order = 0; order <= N; ++order) {
    if (order > 1) fact *= order;

    double best_cond = std::numeric_limits<double>::infinity();
    double best_estimate = 0.0;
    OrderDiagnostics best_diag;
    bool have_any = false;

    double h = cfg.h_max;
    while (h > 0.0) {
      const std::vector<std::size_t> idx = detail::nearest_in_window(sx, p, m, h);
      if (idx.size() < static_cast<std::size_t>(order) + 1) break;  // nodes ran out
      std::vector<double> nodes(idx.size()), values(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        nodes[i] = sx[idx[i]];
        values[i] = sy[idx[i]];
      }
      const WeightTable table = fd_weights(nodes, order, p);
      const double estimate = apply_weights(table, values);
      if (!have_any || table.condition_estimate < best_cond) {
        have_any = true;
        best_cond = table.condition_estimate;
        best_estimate = estimate;
        best_diag = {order, h, static_cast<int>(nodes.size()), table.condition_estimate, false};
      }
      if (table.condition_estimate <= cfg.cond_max) {
        best_estimate = estimate;
        best_diag = {order, h, static_cast<int>(nodes.size()), table.condition_estimate, true};
        break;
      }
      h *= cfg.h_shrink;
    }

    if (!have_any) {
      std::ostringstream os;
      os << "order " << order << ": no window held " << (order + 1) << " distinct points";
      shortfalls.push_back(os.str());
      continue;
    }
    model.coefficients[static_cast<std::size_t>(order)] = best_estimate / fact;
    model.diagnostics[static_cast<std::size_t>(order)] = best_diag;
  }

  if (!shortfalls.empty()) {
    std::ostringstream os;
    os << "fit: per-order shortfall:";
    for (const auto& s : shortfalls) os << " [" << s << "]";
    throw insufficient_data_error(os.str());
  }
  return model;
}

}  // namespace taylor_learn
