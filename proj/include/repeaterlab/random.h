#pragma once

#include <cstdint>
#include <random>

namespace repeaterlab {

/// splitmix64 finalizer; used to derive independent seeds from (seed, counter).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// A seeded random stream. Streams forked from the same parent with distinct
/// counters are independent, and forking never advances the parent, so the
/// draws seen by one node do not depend on how many other nodes exist.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  RandomStream fork(std::uint64_t stream_id) const {
    return RandomStream{mix64(seed_ ^ mix64(stream_id + 0x632BE59BD9B4E019ULL))};
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) {
    if (p >= 1.0) {
      return true;
    }
    if (p <= 0.0) {
      return false;
    }
    return uniform() < p;
  }

  /// Uniform integer in [0, n).
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>((engine_() >> 32) * n >> 32);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace repeaterlab
