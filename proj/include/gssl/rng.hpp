#pragma once

#include <cmath>
#include <cstdint>

namespace gssl {

/// SplitMix64 generator. Streams are derived by hashing (seed, key...) so that
/// independent work items (points, trials, walks) get decorrelated sequences
/// whose draws do not depend on scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  /// Hash-combine a seed with up to three stream keys.
  static std::uint64_t key(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                           std::uint64_t c = 0) {
    std::uint64_t s = mix(seed + kGamma);
    s = mix(s + kGamma * (a + 1));
    s = mix(s + kGamma * (b + 1));
    s = mix(s + kGamma * (c + 1));
    return s;
  }

  static Rng stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    return Rng(key(seed, a, b, c));
  }

  std::uint64_t next() {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0ull - n) % n;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Marsaglia polar; spare value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    for (;;) {
      double u = 2.0 * uniform() - 1.0;
      double v = 2.0 * uniform() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
      }
    }
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gssl
