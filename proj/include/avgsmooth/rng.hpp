#pragma once

#include <cstdint>
#include <limits>

namespace avgsmooth {

/// SplitMix64 finalizer.
inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the k-th draw (k = 1, 2, ...) is
/// splitmix64_mix(seed + k * 0x9E3779B97F4A7C15), wrapping mod 2^64.
/// Doubles take the top 53 bits, so uniform() lies in [0, 1).
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kIncrement = 0x9E3779B97F4A7C15ULL;

  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  constexpr result_type operator()() noexcept {
    ++counter_;
    return splitmix64_mix(seed_ + counter_ * kIncrement);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound); bound > 0. Uses the multiply-high reduction.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const auto x = static_cast<unsigned __int128>((*this)()) * bound;
    return static_cast<std::uint64_t>(x >> 64);
  }

  [[nodiscard]] constexpr std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Deterministic child seed for a (stream, index) pair of a master seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                           std::uint64_t index = 0) noexcept {
  std::uint64_t h = splitmix64_mix(master ^ 0x6A09E667F3BCC909ULL);
  h = splitmix64_mix(h + stream * CounterRng::kIncrement);
  return splitmix64_mix(h + index * 0xD1B54A32D192ED03ULL);
}

}  // namespace avgsmooth
