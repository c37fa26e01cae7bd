#pragma once

#include <stdexcept>
#include <string>

namespace taylor_learn {

// Bad user-supplied configuration (unknown names, out-of-range parameters,
// malformed files). CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// The request is well-formed but outside what the implementation can certify
// or compute (uncertified distribution family, derivative order beyond the
// supported cap). CLI maps this to exit code 3.
class capability_error : public std::runtime_error {
 public:
  explicit capability_error(const std::string& what) : std::runtime_error(what) {}
};

// Stencil construction failed: duplicate nodes after the relative-spread
// dedup policy, or fewer nodes than the derivative order needs.
class degenerate_stencil_error : public std::runtime_error {
 public:
  explicit degenerate_stencil_error(const std::string& what) : std::runtime_error(what) {}
};

// fit() could not assemble enough distinct sample points; carries the
// per-order shortfall report in the message.
class insufficient_data_error : public std::runtime_error {
 public:
  explicit insufficient_data_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace taylor_learn
