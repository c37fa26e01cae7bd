#pragma once

#include <cmath>
#include <cstdint>

namespace taylor_learn {

// Counter-based uniform generator. Every variate is a pure function of
// (seed, index, slot), so draw i never depends on draws j < i; this is what
// gives sampling its prefix property and makes trial-level parallelism safe.
// Each sample index owns a fixed budget of slots (kSlotsPerIndex), enough for
// one mixture selection plus a Box-Muller pair.
inline constexpr std::uint64_t kSlotsPerIndex = 4;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline std::uint64_t mix_bits(std::uint64_t seed, std::uint64_t counter) {
  // Two rounds decorrelate consecutive counters under adversarial seeds.
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(counter * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL));
}

// Uniform in [0, 1), 53-bit resolution.
inline double uniform_slot(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) {
  const std::uint64_t bits = mix_bits(seed, index * kSlotsPerIndex + slot);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1]; safe as a log() argument.
inline double uniform_open_slot(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) {
  const std::uint64_t bits = mix_bits(seed, index * kSlotsPerIndex + slot);
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Standard normal from two slots (Box-Muller, cosine branch).
inline double normal_slots(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) {
  const double u1 = uniform_open_slot(seed, index, slot);
  const double u2 = uniform_slot(seed, index, slot + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Derives an unrelated stream (e.g. the held-out test draw of a trial).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t salt) {
  return detail::splitmix64(seed ^ detail::splitmix64(salt ^ 0xA0761D6478BD642FULL));
}

}  // namespace taylor_learn
