#pragma once

#include <cstdint>
#include <limits>

namespace latcover {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based 64-bit generator. The i-th output of a stream is a pure
/// function of (key, i), so streams can be derived per trial and replayed
/// without sharing state. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key = 0, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  /// Independent stream for one trial of an experiment seeded by `seed`.
  static constexpr CounterRng stream(std::uint64_t seed, std::uint64_t trial) noexcept {
    const std::uint64_t k = mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + mix64(trial + 0x3c6ef372fe94f82bULL));
    return CounterRng(k, 0);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    // Two rounds of the finalizer over a Weyl sequence keyed per stream.
    const std::uint64_t x = key_ + 0x9e3779b97f4a7c15ULL * (++counter_);
    return mix64(mix64(x) ^ key_);
  }

  /// Uniform double in the open interval (0, 1).
  constexpr double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace latcover
