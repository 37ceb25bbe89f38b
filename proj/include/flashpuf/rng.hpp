// Counter-based, keyed random numbers.
//
// Every random quantity in the simulator is a pure function of a key tuple
// (chip seed, block, page, byte, bit, role, ...). Nothing depends on the
// order in which values are requested, so thresholds can be computed lazily
// and two chips with the same seed agree bit for bit.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace flashpuf::rng {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Hashes an ordered key tuple into 64 bits.
constexpr std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

/// Uniform on the open interval (0, 1). 52 bits keep the half-step offset
/// exactly representable, so 1.0 is never produced.
constexpr double to_unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Roles separate independent streams drawn for the same cell.
enum class Stream : std::uint64_t {
  IntraOrder = 1,
  PairOrder = 2,
  ReadOrder = 3,
  LatencyVariation = 4,
  LatencyNoise = 5,
  ExperimentData = 6,
};

/// Sequential generator over a keyed counter: value i = mix(key, i).
/// Satisfies UniformRandomBitGenerator.
class KeyedStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr KeyedStream(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform integer in [0, bound) by rejection, platform independent.
  constexpr std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t v = (*this)();
    while (v >= limit) v = (*this)();
    return v % bound;
  }

  constexpr double unit() { return to_unit_open((*this)()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Standard normal quantile (inverse CDF) for p in (0, 1). Acklam's rational
/// approximation followed by one Halley step against std::erfc; accurate to
/// a few ulps over the whole range.
double normal_quantile(double p);

/// Standard normal deviate for a key.
inline double standard_normal(std::uint64_t key) { return normal_quantile(to_unit_open(mix64(key))); }

}  // namespace flashpuf::rng
