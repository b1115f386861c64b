#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "tda/error.hpp"

namespace tda {

// Counter-based generator: output i of a stream is splitmix64's finalizer
// applied to key + i * golden_gamma. Streams are derived from (seed, ids)
// by hashing, so per-sample draws do not depend on iteration order.
//
// The stream layout is versioned; any change to derivation or output
// mapping must bump kRngVersion since golden files depend on it.
inline constexpr std::string_view kRngName = "splitmix64-ctr";
inline constexpr int kRngVersion = 1;

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to turn sample ids into stream ids.
inline constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  // Independent sub-stream keyed by this stream's key and `id`.
  constexpr CounterRng split(std::uint64_t id) const noexcept {
    return CounterRng(mix64(key_ ^ mix64(id + kGamma)));
  }
  CounterRng split(std::string_view id) const noexcept {
    return split(hash_string(id));
  }

  constexpr std::uint64_t next_u64() noexcept {
    return mix64(key_ + (++counter_) * kGamma);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ValidationError("CounterRng::below: n must be positive");
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Box-Muller; consumes two uniforms per call.
  double normal(double mean, double sigma) noexcept {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline CounterRng make_rng(std::uint64_t seed) { return CounterRng(mix64(seed)); }

}  // namespace tda
