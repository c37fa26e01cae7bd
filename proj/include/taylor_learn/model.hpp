#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "taylor_learn/errors.hpp"

namespace taylor_learn {

// Per-derivative-order record of how the estimate was produced.
struct OrderDiagnostics {
  int order = 0;
  double window = 0.0;  // half-width actually used
  int node_count = 0;
  double condition_estimate = 1.0;
  bool condition_ok = true;
};

// The learned hypothesis: yhat(x) = sum_j c_j (x - p)^j.
struct PolynomialModel {
  double expansion_point = 0.0;
  std::vector<double> coefficients;
  std::vector<OrderDiagnostics> diagnostics;

  double operator()(double x) const {
    const double u = x - expansion_point;
    double acc = 0.0;
    for (std::size_t j = coefficients.size(); j-- > 0;) acc = acc * u + coefficients[j];
    return acc;
  }

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }

  // yhat^(j)(p) = j! c_j
  double derivative_at_point(int order) const {
    if (order < 0 || static_cast<std::size_t>(order) >= coefficients.size()) return 0.0;
    double fact = 1.0;
    for (int i = 2; i <= order; ++i) fact *= i;
    return fact * coefficients[static_cast<std::size_t>(order)];
  }

  // Smallest K with j!|c_j| <= K^j for j >= 1, so |yhat(x) - c_0| admits the
  // e^{K|x-p|} - 1 envelope. Zero for constant models.
  double growth_constant() const {
    double k = 0.0;
    for (std::size_t j = 1; j < coefficients.size(); ++j) {
      if (coefficients[j] == 0.0) continue;
      const double lg = std::lgamma(static_cast<double>(j) + 1.0) + std::log(std::abs(coefficients[j]));
      k = std::max(k, std::exp(lg / static_cast<double>(j)));
    }
    return k;
  }
};

// Stable content digest (FNV-1a over the IEEE bit patterns); lets trial
// records compare models across runs without parsing floats back.
inline std::string model_digest(const PolynomialModel& m) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFFULL;
      h *= 1099511628211ULL;
    }
  };
  mix(m.expansion_point);
  for (double c : m.coefficients) mix(c);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline nlohmann::json model_to_json(const PolynomialModel& m) {
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& d : m.diagnostics) {
    diag.push_back({{"order", d.order},
                    {"window", d.window},
                    {"node_count", d.node_count},
                    {"condition_estimate", d.condition_estimate},
                    {"condition_ok", d.condition_ok}});
  }
  return {{"expansion_point", m.expansion_point},
          {"coefficients", m.coefficients},
          {"diagnostics", diag},
          {"digest", model_digest(m)}};
}

inline PolynomialModel model_from_json(const nlohmann::json& j) {
  PolynomialModel m;
  try {
    m.expansion_point = j.at("expansion_point").get<double>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    if (j.contains("diagnostics")) {
      for (const auto& d : j.at("diagnostics")) {
        OrderDiagnostics od;
        od.order = d.at("order").get<int>();
        od.window = d.at("window").get<double>();
        od.node_count = d.at("node_count").get<int>();
        od.condition_estimate = d.at("condition_estimate").get<double>();
        od.condition_ok = d.value("condition_ok", true);
        m.diagnostics.push_back(od);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad model JSON: ") + e.what());
  }
  if (m.coefficients.empty()) throw config_error("model needs at least one coefficient");
  return m;
}

}  // namespace taylor_learn
