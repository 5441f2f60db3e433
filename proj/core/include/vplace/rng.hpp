#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vplace {

/// SplitMix64 finaliser. Used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for a named substream: mixes the parent seed, a component tag and an
/// index (cell, run, trial). Stable across platforms and releases.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0) noexcept;

/// Deterministic generator: std::mt19937_64 engine with platform-independent
/// bounded-integer and real draws (the std distributions are not portable).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Exponential variate with the given rate (> 0).
  double exponential(double rate);

  /// Child generator for a named substream.
  Rng split(std::string_view tag, std::uint64_t index = 0);

 private:
  std::mt19937_64 engine_;
};

}  // namespace vplace
