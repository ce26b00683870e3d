#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace brls {

/// Deterministic random source. Every draw is derived from the raw
/// mt19937_64 word stream: std::normal_distribution and
/// std::uniform_int_distribution are implementation-defined, which would
/// break byte-reproducibility of experiment outputs across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Independent substream; per-trial streams are derived as seed XOR index.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(seed ^ index);
  }

  std::uint64_t next_word() { return gen_(); }

  void skip(std::uint64_t count) { gen_.discard(count); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Exact uniform draw from {0,...,bound-1} by rejection; no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t word = gen_();
      if (word >= threshold) return word % bound;
    }
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace brls
