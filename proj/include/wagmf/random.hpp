#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace wagmf {

/// Counter-based generator: the i-th draw of stream (seed, stream) is
/// splitmix64_mix(seed_key(seed, stream) + (i + 1) * golden). Any draw can be
/// recomputed from its coordinates alone, which is how stochastic losses are
/// re-evaluated at a comparator point with the same branch realization.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0) noexcept
      : key_(mix(seed ^ mix(stream + kGolden))), counter_(counter) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t at(std::uint64_t index) const noexcept { return mix(key_ + (index + 1) * kGolden); }

  std::uint64_t operator()() noexcept { return at(counter_++); }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return to_unit((*this)()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, bound) by rejection on the top of the range.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t r;
    do {
      r = (*this)();
    } while (r >= limit);
    return r % bound;
  }

  /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  static double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Stream identifiers, kept distinct so independent consumers of one seed never
/// share draws.
namespace streams {
inline constexpr std::uint64_t kReddiBranch = 1;
inline constexpr std::uint64_t kEpochPermutation = 2;
inline constexpr std::uint64_t kInitialPoint = 3;
inline constexpr std::uint64_t kSyntheticData = 4;
inline constexpr std::uint64_t kProblemInstance = 5;
}  // namespace streams

}  // namespace wagmf
