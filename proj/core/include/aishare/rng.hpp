#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

namespace aishare {

/// SplitMix64 output permutation (Stafford mix13). Pure integer mixing, so
/// results are identical across platforms and compilers.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

/// Hash of a (seed, stream, counter) triple. Incrementing any component
/// yields an independent-looking draw, which makes parallel generation
/// reproducible regardless of scheduling.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t counter) noexcept {
  std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ull);
  h = mix64(h ^ (stream + 0xC2B2AE3D27D4EB4Full));
  h = mix64(h ^ (counter + 0x165667B19E3779F9ull));
  return h;
}

/// Counter-based deterministic random stream. Stateless apart from the
/// draw counter; two instances with equal (seed, stream) produce identical
/// sequences.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() { return counter_hash(seed_, stream_, counter_++); }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the pair's second value is cached.
  double next_normal() {
    if (cached_) {
      double z = *cached_;
      cached_.reset();
      return z;
    }
    double u1 = 1.0 - next_unit();  // (0, 1]
    double u2 = next_unit();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  /// Uniform in [0, bound), rejection-sampled to avoid modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound < 2) {
      return 0;
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t bits;
    do {
      bits = next_u64();
    } while (bits >= limit);
    return bits % bound;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::optional<double> cached_;
};

}  // namespace aishare
