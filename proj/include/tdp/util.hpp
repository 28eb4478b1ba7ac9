#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

namespace tdp {

constexpr uint64_t ceil_div_u64(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// bits needed to address n distinct values; 0 for n <= 1
constexpr uint32_t ceil_log2_u32(uint64_t n) {
  uint32_t bits = 0;
  uint64_t span = 1;
  while (span < n) {
    span <<= 1;
    ++bits;
  }
  return bits;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 as the raw engine, with our own mappers so sequences do not
// depend on the stdlib's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // uniform in [0, n), n >= 1
  uint32_t below(uint32_t n) {
    // Lemire's bounded reduction on the high 32 bits
    uint64_t x = next_u64() >> 32;
    return static_cast<uint32_t>((x * n) >> 32);
  }

  // uniform in [0, 1) with 53 random bits
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform float in [lo, hi)
  float uniform_float(float lo, float hi) {
    float u = static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
    return lo + (hi - lo) * u;
  }

  // number of failures before first success, P(success) = p, p in (0, 1]
  uint32_t geometric(double p) {
    if (p >= 1.0) return 0;
    double u = unit();
    double g = std::floor(std::log1p(-u) / std::log1p(-p));
    if (g < 0.0) g = 0.0;
    if (g > 1e6) g = 1e6;
    return static_cast<uint32_t>(g);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tdp
