#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tie {

// splitmix64 finalizer; used to derive independent per-entity seeds.
inline uint64_t mix64(uint64_t a, uint64_t b) {
  uint64_t x = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27; x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// mt19937_64 bit source with hand-rolled inverse-transform / rejection
// samplers so that draws are reproducible across platforms (std::
// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // strictly inside (0,1): safe for log() on either side
  double uniform01() {
    return (double)((gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // inclusive integer range
  uint32_t uniform_u32(uint32_t lo, uint32_t hi) {
    uint64_t span = (uint64_t)(hi - lo) + 1;
    return lo + (uint32_t)(gen_() % span);
  }

  // Box-Muller, spare cached
  double normal() {
    if (has_spare_) { has_spare_ = false; return spare_; }
    double u1 = uniform01(), u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang; shape boost for shape < 1
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      double u = uniform01();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  double chi_square(double df) { return gamma(0.5 * df, 2.0); }

  // ratio construction Y = Z / sqrt(V/nu)
  double student_t(double nu) {
    double z = normal();
    double v = chi_square(nu);
    return z / std::sqrt(v / nu);
  }

  double exponential(double rate) { return -std::log(uniform01()) / rate; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tie
