#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dcekit/normal.hpp"

namespace dce {

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for substream `index` of purpose `stream` under a master seed.
/// Substreams depend only on (seed, stream, index), never on scheduling.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream,
                                       std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

namespace stream {
inline constexpr std::uint64_t design = 0x64657369676eULL;
inline constexpr std::uint64_t simulate = 0x73696d756cULL;
inline constexpr std::uint64_t draws = 0x6472617773ULL;
inline constexpr std::uint64_t scramble = 0x736372616dULL;
inline constexpr std::uint64_t bootstrap = 0x626f6f74ULL;
inline constexpr std::uint64_t oracle = 0x6f7261636cULL;
}  // namespace stream

/// Deterministic generator with platform-independent conversions.
/// std::mt19937_64's output sequence is fixed by the standard; the
/// distribution helpers below avoid the implementation-defined
/// std::*_distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift rejection.
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = engine_();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() { return inverse_normal_cdf(uniform()); }

  /// Standard Gumbel variate, -ln(-ln u).
  double gumbel() { return -std::log(-std::log(uniform())); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dce
