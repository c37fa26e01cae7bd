#pragma once

#include <cmath>
#include <cstddef>

namespace taylor_learn {

inline constexpr double kQuadratureAbsTol = 1e-9;
inline constexpr std::size_t kQuadratureMaxIntervals = 1000000;

namespace detail {

template <typename F>
double simpson(const F& f, double a, double m, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adapt(const F& f, double a, double m, double b, double fa, double fm, double fb, double whole,
             double tol, int depth, std::size_t& intervals) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, lm, m, fa, flm, fm);
  const double right = simpson(f, m, rm, b, fm, frm, fb);
  const double err = (left + right - whole) / 15.0;
  ++intervals;
  if (std::abs(err) <= tol || depth >= 48 || intervals >= kQuadratureMaxIntervals) {
    return left + right + err;
  }
  return adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1, intervals) +
         adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1, intervals);
}

}  // namespace detail

// Adaptive Simpson with absolute tolerance and a hard interval cap. The
// integrands here are smooth except at isolated kinks (model/truth
// crossings, uniform support edges), which bisection isolates quickly.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = kQuadratureAbsTol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  std::size_t intervals = 0;
  const double whole = detail::simpson(f, a, m, b, fa, fm, fb);
  return detail::adapt(f, a, m, b, fa, fm, fb, whole, abs_tol, 0, intervals);
}

}  // namespace taylor_learn
