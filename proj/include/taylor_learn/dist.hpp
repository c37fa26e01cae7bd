#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taylor_learn/analytic.hpp"
#include "taylor_learn/errors.hpp"
#include "taylor_learn/rng.hpp"

namespace taylor_learn {

// Sentinel certificate for distributions with no tail at all (point mass at
// the origin): P(|x| > T) = 0 for every T > 0, so any c works.
inline constexpr double kSubgaussianSentinel = 1e6;

struct Atom {
  double location;
  double weight;
};

// A sampleable marginal on R from one of the certified families: uniform[a,b],
// centered gaussian, point mass, or a finite mixture of those. Exposes the
// exact tail function and density so bounds and quadrature never have to
// estimate them.
class Distribution {
 public:
  struct Impl {
    virtual ~Impl() = default;
    // Crucial contract: draw `index` reads only slots [slot, slot + budget),
    // never global state, which yields seed determinism and the prefix
    // property for free.
    virtual double sample_at(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) const = 0;
    virtual double tail_gt(double T) const = 0;   // P(|x| > T), T >= 0
    virtual double density(double x) const = 0;   // continuous part only
    virtual std::vector<Atom> atoms() const { return {}; }
    virtual std::vector<double> knots() const { return {}; }  // density breakpoints
    virtual std::optional<double> support_bound() const = 0;  // sup |x| over support
    virtual double scale() const = 0;
    virtual std::string name() const = 0;
    virtual nlohmann::json spec() const = 0;
    // Analytic certificate if the family admits one in isolation.
    virtual std::optional<double> analytic_certificate() const = 0;
    // For unbounded families: an exponent valid for every T past the edge of
    // bounded components (gaussian: 1/(4 sigma^2)). nullopt if bounded.
    virtual std::optional<double> tail_exponent_floor() const { return std::nullopt; }
  };

  explicit Distribution(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  double sample_at(std::uint64_t seed, std::uint64_t index) const { return impl_->sample_at(seed, index, 0); }

  std::vector<double> sample(std::uint64_t seed, std::size_t count) const {
    if (count == 0) throw config_error("sample count must be positive");
    std::vector<double> xs(count);
    for (std::size_t i = 0; i < count; ++i) xs[i] = impl_->sample_at(seed, i, 0);
    return xs;
  }

  double tail_gt(double T) const { return T < 0.0 ? 1.0 : impl_->tail_gt(T); }
  // P(|x| >= T): left limit of the tail, needed at atom radii.
  double tail_ge(double T) const {
    double mass_at = 0.0;
    for (const Atom& a : impl_->atoms())
      if (std::abs(a.location) == T) mass_at += a.weight;
    return tail_gt(T) + mass_at;
  }
  double density(double x) const { return impl_->density(x); }
  std::vector<Atom> atoms() const { return impl_->atoms(); }
  std::vector<double> knots() const { return impl_->knots(); }
  std::optional<double> support_bound() const { return impl_->support_bound(); }
  double scale() const { return impl_->scale(); }
  const std::string name() const { return impl_->name(); }
  nlohmann::json spec() const { return impl_->spec(); }

  double subgaussian_constant() const;

 private:
  std::shared_ptr<const Impl> impl_;
};

namespace detail {

struct UniformImpl final : Distribution::Impl {
  double a, b;
  UniformImpl(double a_, double b_) : a(a_), b(b_) {
    if (!(a < b)) throw config_error("uniform requires a < b");
    if (!std::isfinite(a) || !std::isfinite(b)) throw config_error("uniform bounds must be finite");
  }
  double sample_at(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) const override {
    return a + (b - a) * uniform_slot(seed, index, slot);
  }
  double tail_gt(double T) const override {
    // mass of [a,b] outside [-T, T]
    const double inside = std::max(0.0, std::min(b, T) - std::max(a, -T));
    return std::max(0.0, 1.0 - inside / (b - a));
  }
  double density(double x) const override { return (x >= a && x <= b) ? 1.0 / (b - a) : 0.0; }
  std::vector<double> knots() const override { return {a, b}; }
  std::optional<double> support_bound() const override { return std::max(std::abs(a), std::abs(b)); }
  double scale() const override { return std::max(std::abs(a), std::abs(b)); }
  std::string name() const override {
    std::ostringstream os;
    os << "uniform[" << a << "," << b << "]";
    return os.str();
  }
  nlohmann::json spec() const override { return {{"dist", "uniform"}, {"a", a}, {"b", b}}; }
  std::optional<double> analytic_certificate() const override {
    // c = 1/(2B^2) is sound exactly when the support straddles the origin:
    // then P(|x| <= T) >= T/(2B) and 1 - u/2 <= e^{-u^2/2} on [0,1].
    if (a > 0.0 || b < 0.0) return std::nullopt;
    const double B = std::max(std::abs(a), std::abs(b));
    return 1.0 / (2.0 * B * B);
  }
};

struct GaussianImpl final : Distribution::Impl {
  double sigma;
  explicit GaussianImpl(double s) : sigma(s) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw config_error("gaussian requires sigma > 0");
  }
  double sample_at(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) const override {
    return sigma * normal_slots(seed, index, slot);
  }
  double tail_gt(double T) const override { return std::erfc(T / (sigma * std::sqrt(2.0))); }
  double density(double x) const override {
    static const double inv_sqrt2pi = 0.3989422804014326779399461;
    const double z = x / sigma;
    return inv_sqrt2pi / sigma * std::exp(-0.5 * z * z);
  }
  std::optional<double> support_bound() const override { return std::nullopt; }
  double scale() const override { return sigma; }
  std::string name() const override {
    std::ostringstream os;
    os << "gaussian(sigma=" << sigma << ")";
    return os.str();
  }
  nlohmann::json spec() const override { return {{"dist", "gaussian"}, {"sigma", sigma}}; }
  std::optional<double> analytic_certificate() const override {
    // erfc(u/sqrt(2)) <= e^{-u^2/4}: equality at 0, and the gaussian tail
    // decays at twice that exponent. The factor-4 slack absorbs the missing
    // prefactor of the Chernoff bound.
    return 1.0 / (4.0 * sigma * sigma);
  }
  std::optional<double> tail_exponent_floor() const override { return 1.0 / (4.0 * sigma * sigma); }
};

struct PointMassImpl final : Distribution::Impl {
  double at;
  explicit PointMassImpl(double x0) : at(x0) {
    if (!std::isfinite(at)) throw config_error("point mass location must be finite");
  }
  double sample_at(std::uint64_t, std::uint64_t, std::uint64_t) const override { return at; }
  double tail_gt(double T) const override { return std::abs(at) > T ? 1.0 : 0.0; }
  double density(double) const override { return 0.0; }
  std::vector<Atom> atoms() const override { return {{at, 1.0}}; }
  std::optional<double> support_bound() const override { return std::abs(at); }
  double scale() const override { return std::max(1.0, std::abs(at)); }
  std::string name() const override {
    std::ostringstream os;
    os << "point_mass(" << at << ")";
    return os.str();
  }
  nlohmann::json spec() const override { return {{"dist", "point_mass"}, {"at", at}}; }
  std::optional<double> analytic_certificate() const override {
    // Off-origin atoms keep P(|x|>T) = 1 on (0,|at|); Def-3 subgaussianity
    // then fails for every c > 0.
    if (at == 0.0) return kSubgaussianSentinel;
    return std::nullopt;
  }
};

struct MixtureImpl final : Distribution::Impl {
  std::vector<double> weights;
  std::vector<std::shared_ptr<const Distribution::Impl>> comps;
  std::vector<double> cum;

  MixtureImpl(std::vector<double> w, std::vector<std::shared_ptr<const Distribution::Impl>> c)
      : weights(std::move(w)), comps(std::move(c)) {
    if (weights.empty() || weights.size() != comps.size()) throw config_error("mixture needs matching weights/components");
    double total = 0.0;
    for (double wi : weights) {
      if (!(wi > 0.0)) throw config_error("mixture weights must be positive");
      total += wi;
    }
    if (std::abs(total - 1.0) > 1e-12) throw config_error("mixture weights must sum to 1");
    cum.resize(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      cum[i] = acc;
    }
    cum.back() = 1.0 + 1e-16;
  }

  double sample_at(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) const override {
    const double u = uniform_slot(seed, index, slot);
    std::size_t pick = 0;
    while (pick + 1 < cum.size() && u >= cum[pick]) ++pick;
    return comps[pick]->sample_at(seed, index, slot + 1);
  }
  double tail_gt(double T) const override {
    double acc = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) acc += weights[i] * comps[i]->tail_gt(T);
    return acc;
  }
  double density(double x) const override {
    double acc = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) acc += weights[i] * comps[i]->density(x);
    return acc;
  }
  std::vector<Atom> atoms() const override {
    std::vector<Atom> out;
    for (std::size_t i = 0; i < comps.size(); ++i)
      for (const Atom& a : comps[i]->atoms()) out.push_back({a.location, weights[i] * a.weight});
    return out;
  }
  std::vector<double> knots() const override {
    std::vector<double> out;
    for (const auto& c : comps)
      for (double k : c->knots()) out.push_back(k);
    std::sort(out.begin(), out.end());
    return out;
  }
  std::optional<double> support_bound() const override {
    double bound = 0.0;
    for (const auto& c : comps) {
      auto s = c->support_bound();
      if (!s) return std::nullopt;
      bound = std::max(bound, *s);
    }
    return bound;
  }
  double scale() const override {
    double s = 0.0;
    for (const auto& c : comps) s = std::max(s, c->scale());
    return s;
  }
  std::string name() const override {
    std::ostringstream os;
    os << "mixture(";
    for (std::size_t i = 0; i < comps.size(); ++i) os << (i ? ", " : "") << weights[i] << "*" << comps[i]->name();
    os << ")";
    return os.str();
  }
  nlohmann::json spec() const override {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < comps.size(); ++i)
      arr.push_back({{"weight", weights[i]}, {"dist", comps[i]->spec()}});
    return {{"dist", "mixture"}, {"components", arr}};
  }
  std::optional<double> analytic_certificate() const override {
    // P_mix(|x|>T) = sum w_i P_i(|x|>T) <= e^{-min(c_i) T^2} when every
    // component is certified on its own. Otherwise certification falls back
    // to the knot/grid minimization of -ln P(|x|>T) / T^2 below.
    double c = kSubgaussianSentinel;
    for (const auto& comp : comps) {
      auto ci = comp->analytic_certificate();
      if (!ci) return std::nullopt;
      c = std::min(c, *ci);
    }
    return c;
  }
  std::optional<double> tail_exponent_floor() const override {
    std::optional<double> floor;
    for (const auto& comp : comps) {
      if (auto f = comp->tail_exponent_floor()) floor = floor ? std::min(*floor, *f) : *f;
    }
    return floor;
  }
};

}  // namespace detail

inline double Distribution::subgaussian_constant() const {
  if (auto c = impl_->analytic_certificate()) return std::min(*c, kSubgaussianSentinel);

  // Fallback for mixtures that contain off-origin atoms: minimize
  // -ln P(|x|>T) / T^2 against the exact closed-form tail. The binding
  // constraints sit at left limits of atom radii / support edges (the tail
  // jumps down there), which we evaluate exactly; smooth stretches get a
  // dense grid with a safety factor.
  const double s = std::max(impl_->scale(), 1e-12);
  if (tail_gt(s * 1e-9) >= 1.0) {
    throw capability_error("distribution '" + impl_->name() +
                           "' is not subgaussian: no mass arbitrarily close to 0");
  }
  double c = kSubgaussianSentinel;
  auto constraint = [&](double T, double tail) -> double {
    if (tail <= 0.0) return kSubgaussianSentinel;
    if (tail >= 1.0) return 0.0;
    return -std::log(tail) / (T * T);
  };
  for (const Atom& a : impl_->atoms()) {
    const double r = std::abs(a.location);
    if (r > 0.0) c = std::min(c, constraint(r, tail_ge(r)));
  }
  const auto edge = impl_->support_bound();
  double hi = edge ? *edge : 20.0 * s;
  if (edge) c = std::min(c, constraint(*edge, tail_ge(*edge)));
  double grid_min = kSubgaussianSentinel;
  const int n = 4000;
  for (int i = 1; i <= n; ++i) {
    const double T = hi * static_cast<double>(i) / static_cast<double>(n);
    grid_min = std::min(grid_min, constraint(T, tail_gt(T)));
  }
  c = std::min(c, 0.95 * grid_min);
  // Past the grid end only unbounded components carry mass; their analytic
  // exponent floor keeps the certificate valid for every T.
  if (!edge) {
    if (auto floor = impl_->tail_exponent_floor()) c = std::min(c, *floor);
  }
  if (!(c > 0.0)) {
    throw capability_error("distribution '" + impl_->name() + "' is not subgaussian (certificate <= 0)");
  }
  return std::min(c, kSubgaussianSentinel);
}

inline Distribution make_uniform(double a, double b) {
  return Distribution(std::make_shared<detail::UniformImpl>(a, b));
}
inline Distribution make_gaussian(double sigma) {
  return Distribution(std::make_shared<detail::GaussianImpl>(sigma));
}
inline Distribution make_point_mass(double at) {
  return Distribution(std::make_shared<detail::PointMassImpl>(at));
}

namespace detail {
inline std::shared_ptr<const Distribution::Impl> impl_from_json(const nlohmann::json& j, bool allow_mixture);
}

inline Distribution distribution_from_json(const nlohmann::json& j) {
  return Distribution(detail::impl_from_json(j, /*allow_mixture=*/true));
}

inline Distribution make_mixture(const std::vector<std::pair<double, Distribution>>& parts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [w, d] : parts) arr.push_back({{"weight", w}, {"dist", d.spec()}});
  return distribution_from_json({{"dist", "mixture"}, {"components", arr}});
}

namespace detail {
inline std::shared_ptr<const Distribution::Impl> impl_from_json(const nlohmann::json& j, bool allow_mixture) {
  if (!j.is_object() || !j.contains("dist")) throw config_error("distribution spec must be an object with a 'dist' key");
  const std::string kind = j.at("dist").get<std::string>();
  if (kind == "uniform") return std::make_shared<UniformImpl>(j.at("a").get<double>(), j.at("b").get<double>());
  if (kind == "gaussian") return std::make_shared<GaussianImpl>(j.at("sigma").get<double>());
  if (kind == "point_mass") return std::make_shared<PointMassImpl>(j.at("at").get<double>());
  if (kind == "mixture") {
    if (!allow_mixture) throw config_error("mixtures may not nest");
    std::vector<double> w;
    std::vector<std::shared_ptr<const Distribution::Impl>> comps;
    for (const auto& part : j.at("components")) {
      w.push_back(part.at("weight").get<double>());
      comps.push_back(impl_from_json(part.at("dist"), /*allow_mixture=*/false));
    }
    return std::make_shared<MixtureImpl>(std::move(w), std::move(comps));
  }
  throw config_error("unknown distribution '" + kind + "'");
}
}  // namespace detail

// Noiseless dataset: y_i = f(x_i) exactly, in input order.
struct LabeledDataset {
  std::vector<double> xs;
  std::vector<double> ys;
  std::uint64_t seed = 0;
  std::string fn_name;

  std::size_t size() const { return xs.size(); }
};

inline LabeledDataset label(const AnalyticFunction& f, const std::vector<double>& xs, std::uint64_t seed = 0) {
  LabeledDataset d;
  d.xs = xs;
  d.ys.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) d.ys[i] = f(xs[i]);
  d.seed = seed;
  d.fn_name = f.name();
  return d;
}

struct TailCheckRow {
  double T;
  double frequency;
  double bound;
  bool pass;
};

// Empirical spot check of the Def-3 inequality at each requested radius. The
// pass gate allows three binomial standard errors plus 3/n of slack.
inline std::vector<TailCheckRow> empirical_tail_check(const Distribution& d, std::uint64_t seed, std::size_t n,
                                                      const std::vector<double>& T_grid) {
  if (n < 1000) throw config_error("empirical_tail_check needs n >= 1000");
  const double c = d.subgaussian_constant();
  const std::vector<double> xs = d.sample(seed, n);
  std::vector<TailCheckRow> rows;
  rows.reserve(T_grid.size());
  for (double T : T_grid) {
    std::size_t hits = 0;
    for (double x : xs)
      if (std::abs(x) > T) ++hits;
    const double freq = static_cast<double>(hits) / static_cast<double>(n);
    const double bound = std::exp(-c * T * T);
    const double slack = 3.0 * std::sqrt(bound * (1.0 - bound) / static_cast<double>(n)) + 3.0 / static_cast<double>(n);
    rows.push_back({T, freq, bound, freq <= bound + slack});
  }
  return rows;
}

}  // namespace taylor_learn
