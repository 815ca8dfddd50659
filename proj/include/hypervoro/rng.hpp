#pragma once

// Counter-based pseudo-randomness (Philox4x32-10) with hierarchical stream
// derivation. Streams are cheap value types: a (seed, path...) pair always
// denotes the same infinite sequence, independent of construction order or
// thread, which is what makes estimator output reproducible under any
// worker count.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace hypervoro {
namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox4x32_10(
    std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t p0 = std::uint64_t(kPhiloxM0) * ctr[0];
    std::uint64_t p1 = std::uint64_t(kPhiloxM1) * ctr[2];
    std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : ident_(detail::splitmix64(seed)) {
    std::uint64_t k = detail::splitmix64(ident_ ^ 0x02011CE34BCE797Full);
    key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
  }

  // Independent sub-stream addressed by a path component. Derivation is a
  // pure function of (parent identity, path), not of parent consumption.
  RngStream child(std::uint64_t path) const {
    return RngStream(Derived{}, detail::splitmix64(ident_ ^ detail::splitmix64(
                                    path ^ 0x632BE59BD9B4E019ull)));
  }
  RngStream child(std::uint64_t a, std::uint64_t b) const {
    return child(a).child(b);
  }
  RngStream child(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return child(a).child(b).child(c);
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = detail::philox4x32_10(ctr_, key_);
      pos_ = 0;
      if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
    }
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform double in [0, 1) with 53 random mantissa bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be > 0");
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Poisson draw. Product method below mean 10, transformed rejection
  // (Hormann's PTRS) above it.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
      throw std::domain_error("poisson: mean must be >= 0 and finite");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
      double limit = std::exp(-mean);
      std::uint64_t k = 0;
      double prod = next_double();
      while (prod > limit) {
        ++k;
        prod *= next_double();
      }
      return k;
    }
    double b = 0.931 + 2.53 * std::sqrt(mean);
    double a = -0.059 + 0.02483 * b;
    double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    double v_r = 0.9277 - 3.6224 / (b - 2.0);
    double log_mean = std::log(mean);
    for (;;) {
      double u = next_double() - 0.5;
      double v = next_double();
      double us = 0.5 - std::abs(u);
      double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return std::uint64_t(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kf * log_mean - mean - std::lgamma(kf + 1.0))
        return std::uint64_t(kf);
    }
  }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return next_u64(); }

  std::uint64_t identity() const { return ident_; }

 private:
  struct Derived {};
  RngStream(Derived, std::uint64_t ident) : ident_(ident) {
    std::uint64_t k = detail::splitmix64(ident_ ^ 0x02011CE34BCE797Full);
    key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
  }

  std::uint64_t ident_;
  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{0, 0, 0, 0};
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

}  // namespace hypervoro
