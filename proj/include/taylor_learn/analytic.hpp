#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taylor_learn/errors.hpp"

namespace taylor_learn {

// Highest derivative order any oracle supports. 64 keeps j! comfortably
// inside double range (overflow starts near 171!).
inline constexpr int kMaxDerivativeOrder = 64;

// A target function with exact evaluation, an exact derivative oracle, and a
// growth certificate K such that n!|a_n| <= K^n for its Taylor coefficients
// a_n at 0 (n >= 1). Functions whose series at 0 does not converge on all of
// R carry certified() == false and are usable only as negative examples.
class AnalyticFunction {
 public:
  struct Impl {
    virtual ~Impl() = default;
    virtual double eval(double x) const = 0;
    virtual double derivative(int order, double p) const = 0;
    virtual double growth_constant() const = 0;          // K
    virtual bool certified() const = 0;                  // entire + subexponential
    virtual std::optional<int> series_degree() const { return std::nullopt; }
    virtual std::string name() const = 0;
    virtual nlohmann::json spec() const = 0;
  };

  explicit AnalyticFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  double operator()(double x) const { return impl_->eval(x); }

  double derivative(int order, double p) const {
    if (order < 0) throw config_error("derivative order must be nonnegative");
    if (order > kMaxDerivativeOrder) {
      throw capability_error("derivative order " + std::to_string(order) + " exceeds supported cap " +
                             std::to_string(kMaxDerivativeOrder));
    }
    return impl_->derivative(order, p);
  }

  // K of the subexponential certificate. Refused for quarantined functions:
  // no valid K exists and callers must not build tail bounds from one.
  double growth_constant() const {
    if (!impl_->certified()) {
      throw capability_error("function '" + impl_->name() + "' has no subexponential certificate");
    }
    return impl_->growth_constant();
  }

  bool certified() const { return impl_->certified(); }
  std::optional<int> series_degree() const { return impl_->series_degree(); }
  const std::string name() const { return impl_->name(); }
  nlohmann::json spec() const { return impl_->spec(); }

 private:
  std::shared_ptr<const Impl> impl_;
};

// Truncated Taylor expansion: sum of coeffs[j] * (x - expansion_point)^j.
struct TaylorPolynomial {
  double expansion_point = 0.0;
  std::vector<double> coefficients;

  double operator()(double x) const {
    const double u = x - expansion_point;
    double acc = 0.0;
    for (std::size_t j = coefficients.size(); j-- > 0;) acc = acc * u + coefficients[j];
    return acc;
  }

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

struct SinImpl final : AnalyticFunction::Impl {
  double eval(double x) const override { return std::sin(x); }
  double derivative(int order, double p) const override {
    switch (order % 4) {
      case 0: return std::sin(p);
      case 1: return std::cos(p);
      case 2: return -std::sin(p);
      default: return -std::cos(p);
    }
  }
  double growth_constant() const override { return 1.0; }
  bool certified() const override { return true; }
  std::string name() const override { return "sin"; }
  nlohmann::json spec() const override { return {{"fn", "sin"}}; }
};

struct CosImpl final : AnalyticFunction::Impl {
  double eval(double x) const override { return std::cos(x); }
  double derivative(int order, double p) const override {
    switch (order % 4) {
      case 0: return std::cos(p);
      case 1: return -std::sin(p);
      case 2: return -std::cos(p);
      default: return std::sin(p);
    }
  }
  double growth_constant() const override { return 1.0; }
  bool certified() const override { return true; }
  std::string name() const override { return "cos"; }
  nlohmann::json spec() const override { return {{"fn", "cos"}}; }
};

struct ExpScaledImpl final : AnalyticFunction::Impl {
  double alpha;
  explicit ExpScaledImpl(double a) : alpha(a) {}
  double eval(double x) const override { return std::exp(alpha * x); }
  double derivative(int order, double p) const override {
    return std::pow(alpha, order) * std::exp(alpha * p);
  }
  double growth_constant() const override { return std::max(1.0, std::abs(alpha)); }
  bool certified() const override { return true; }
  std::string name() const override {
    if (alpha == 1.0) return "exp";
    std::ostringstream os;
    os << "exp_scaled(" << alpha << ")";
    return os.str();
  }
  nlohmann::json spec() const override {
    if (alpha == 1.0) return {{"fn", "exp"}};
    return {{"fn", "exp_scaled"}, {"alpha", alpha}};
  }
};

struct PolyImpl final : AnalyticFunction::Impl {
  std::vector<double> coeffs;  // a_0 + a_1 x + ...

  explicit PolyImpl(std::vector<double> c) : coeffs(std::move(c)) {
    if (coeffs.empty()) throw config_error("poly needs at least one coefficient");
  }

  double eval(double x) const override {
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * x + coeffs[j];
    return acc;
  }

  double derivative(int order, double p) const override {
    // d^n/dx^n sum a_j x^j = sum_{j>=n} a_j * j!/(j-n)! * p^{j-n}
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > static_cast<std::size_t>(order);) {
      double falling = 1.0;
      for (std::size_t i = 0; i < static_cast<std::size_t>(order); ++i) falling *= static_cast<double>(j - i);
      acc = acc * p + coeffs[j] * falling;
    }
    return acc;
  }

  double growth_constant() const override {
    double k = 1.0;
    for (std::size_t j = 1; j < coeffs.size(); ++j) {
      if (coeffs[j] == 0.0) continue;
      const double lg = std::lgamma(static_cast<double>(j) + 1.0) + std::log(std::abs(coeffs[j]));
      k = std::max(k, std::exp(lg / static_cast<double>(j)));
    }
    return k;
  }

  bool certified() const override { return true; }
  std::optional<int> series_degree() const override { return static_cast<int>(coeffs.size()) - 1; }
  std::string name() const override {
    std::ostringstream os;
    os << "poly[";
    for (std::size_t j = 0; j < coeffs.size(); ++j) os << (j ? "," : "") << coeffs[j];
    os << "]";
    return os.str();
  }
  nlohmann::json spec() const override { return {{"fn", "poly"}, {"coeffs", coeffs}}; }
};

struct ComboImpl final : AnalyticFunction::Impl {
  std::vector<std::pair<double, AnalyticFunction>> terms;

  explicit ComboImpl(std::vector<std::pair<double, AnalyticFunction>> t) : terms(std::move(t)) {
    if (terms.empty()) throw config_error("combo needs at least one term");
  }

  double eval(double x) const override {
    double acc = 0.0;
    for (const auto& [w, f] : terms) acc += w * f(x);
    return acc;
  }
  double derivative(int order, double p) const override {
    double acc = 0.0;
    for (const auto& [w, f] : terms) acc += w * f.derivative(order, p);
    return acc;
  }
  double growth_constant() const override {
    // n!|a_n| <= sum |w_i| K_i^n <= (max(1, sum|w_i|) * max K_i)^n for n >= 1.
    double wsum = 0.0, kmax = 0.0;
    for (const auto& [w, f] : terms) {
      wsum += std::abs(w);
      kmax = std::max(kmax, f.growth_constant());
    }
    return std::max(1.0, wsum) * kmax;
  }
  bool certified() const override {
    return std::all_of(terms.begin(), terms.end(), [](const auto& t) { return t.second.certified(); });
  }
  std::optional<int> series_degree() const override {
    int deg = -1;
    for (const auto& [w, f] : terms) {
      auto d = f.series_degree();
      if (!d) return std::nullopt;
      deg = std::max(deg, *d);
    }
    return deg;
  }
  std::string name() const override {
    std::ostringstream os;
    os << "combo(";
    for (std::size_t i = 0; i < terms.size(); ++i)
      os << (i ? " + " : "") << terms[i].first << "*" << terms[i].second.name();
    os << ")";
    return os.str();
  }
  nlohmann::json spec() const override {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [w, f] : terms) arr.push_back({{"weight", w}, {"fn", f.spec()}});
    return {{"fn", "combo"}, {"terms", arr}};
  }
};

// 1/(1+x^2): analytic on R but its series at 0 has radius 1, so it is not
// equal to its Taylor series globally and n!|a_n| = n! for even n defeats any
// K. Quarantined; derivatives come from the partial-fraction closed form
// f^(n)(x) = (-1)^n n! Im((x - i)^{-(n+1)}).
struct RungeImpl final : AnalyticFunction::Impl {
  double eval(double x) const override { return 1.0 / (1.0 + x * x); }
  double derivative(int order, double p) const override {
    const std::complex<double> z(p, -1.0);
    const std::complex<double> w = std::pow(z, -(order + 1.0));
    const double sign = (order % 2 == 0) ? 1.0 : -1.0;
    return sign * factorial(order) * w.imag();
  }
  double growth_constant() const override { return std::numeric_limits<double>::quiet_NaN(); }
  bool certified() const override { return false; }
  std::string name() const override { return "runge"; }
  nlohmann::json spec() const override { return {{"fn", "runge"}}; }
};

}  // namespace detail

inline AnalyticFunction make_sin() { return AnalyticFunction(std::make_shared<detail::SinImpl>()); }
inline AnalyticFunction make_cos() { return AnalyticFunction(std::make_shared<detail::CosImpl>()); }
inline AnalyticFunction make_exp() { return AnalyticFunction(std::make_shared<detail::ExpScaledImpl>(1.0)); }
inline AnalyticFunction make_exp_scaled(double alpha) {
  return AnalyticFunction(std::make_shared<detail::ExpScaledImpl>(alpha));
}
inline AnalyticFunction make_poly(std::vector<double> coeffs) {
  return AnalyticFunction(std::make_shared<detail::PolyImpl>(std::move(coeffs)));
}
inline AnalyticFunction make_combo(std::vector<std::pair<double, AnalyticFunction>> terms) {
  return AnalyticFunction(std::make_shared<detail::ComboImpl>(std::move(terms)));
}
inline AnalyticFunction make_runge() { return AnalyticFunction(std::make_shared<detail::RungeImpl>()); }

// Config-facing registry: {"fn": "sin"}, {"fn": "poly", "coeffs": [2,3]}, ...
inline AnalyticFunction function_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("fn")) throw config_error("function spec must be an object with an 'fn' key");
  const std::string kind = j.at("fn").get<std::string>();
  if (kind == "sin") return make_sin();
  if (kind == "cos") return make_cos();
  if (kind == "exp") return make_exp();
  if (kind == "exp_scaled") {
    if (!j.contains("alpha")) throw config_error("exp_scaled needs 'alpha'");
    return make_exp_scaled(j.at("alpha").get<double>());
  }
  if (kind == "poly") {
    if (!j.contains("coeffs")) throw config_error("poly needs 'coeffs'");
    return make_poly(j.at("coeffs").get<std::vector<double>>());
  }
  if (kind == "combo") {
    if (!j.contains("terms")) throw config_error("combo needs 'terms'");
    std::vector<std::pair<double, AnalyticFunction>> terms;
    for (const auto& t : j.at("terms")) {
      terms.emplace_back(t.at("weight").get<double>(), function_from_json(t.at("fn")));
    }
    return make_combo(std::move(terms));
  }
  if (kind == "runge") return make_runge();
  throw config_error("unknown function '" + kind + "'");
}

inline TaylorPolynomial taylor_polynomial(const AnalyticFunction& f, double p, int degree) {
  if (degree < 0) throw config_error("taylor degree must be nonnegative");
  TaylorPolynomial t;
  t.expansion_point = p;
  t.coefficients.resize(static_cast<std::size_t>(degree) + 1);
  double fact = 1.0;
  for (int j = 0; j <= degree; ++j) {
    if (j > 1) fact *= j;
    t.coefficients[static_cast<std::size_t>(j)] = f.derivative(j, p) / fact;
  }
  return t;
}

// Upper estimate of sup |T_{p,N}(f) - f| over the window of half-width T
// around p: dense-grid maximum plus the analytic series remainder. The
// remainder uses exact derivative magnitudes up to the order cap and the
// K-envelope e^{K|p|} (KT)^j / j! beyond it; terminating series contribute
// an exactly-zero tail past their degree.
inline double truncation_sup_error(const AnalyticFunction& f, double p, int degree, double T,
                                   int grid_points = 10000) {
  if (!(T > 0.0) || !std::isfinite(T)) throw config_error("truncation window T must be positive and finite");
  const TaylorPolynomial poly = taylor_polynomial(f, p, degree);
  double grid_max = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double x = p - T + (2.0 * T) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    grid_max = std::max(grid_max, std::abs(poly(x) - f(x)));
  }

  const std::optional<int> term_degree = f.series_degree();
  double remainder = 0.0;
  const int exact_cap = term_degree ? std::min(*term_degree, kMaxDerivativeOrder) : kMaxDerivativeOrder;
  double fact = detail::factorial(std::min(degree, exact_cap));
  for (int j = degree + 1; j <= exact_cap; ++j) {
    fact *= j;
    remainder += std::abs(f.derivative(j, p)) / fact * std::pow(T, j);
  }
  if (!term_degree) {
    const double k = f.growth_constant();
    const double envelope = std::exp(k * std::abs(p));
    // sum_{j > cap} (KT)^j / j!, in log space until terms are negligible
    double log_term = (exact_cap + 1) * std::log(k * T) - std::lgamma(exact_cap + 2.0);
    double tail = 0.0;
    for (int j = exact_cap + 1; j <= 4 * kMaxDerivativeOrder + 64; ++j) {
      tail += std::exp(log_term);
      log_term += std::log(k * T) - std::log(static_cast<double>(j) + 1.0);
      if (std::exp(log_term) < 1e-18 * std::max(tail, 1e-300)) break;
    }
    remainder += envelope * tail;
  }
  return grid_max + remainder;
}

}  // namespace taylor_learn
