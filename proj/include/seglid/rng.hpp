#pragma once

// Seedable, portable random number generator: xoshiro256** seeded via
// splitmix64. All stochastic behaviour in the library flows through this
// type so runs are bitwise reproducible for a given seed on any platform.

#include <array>
#include <cstdint>
#include <vector>

namespace seglid {

inline uint64_t splitmix64(uint64_t& x) {
  uint64_t z = (x += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform in [0, n); rejection sampling keeps the draw unbiased.
  uint64_t next_below(uint64_t n) {
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  int next_int(int n) { return static_cast<int>(next_below(static_cast<uint64_t>(n))); }

  bool bernoulli(double p) { return next_double() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Deterministic stream derivation, e.g. one child stream per CV fold.
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    uint64_t x = seed ^ (0xA0761D6478BD642Full + stream);
    splitmix64(x);
    return splitmix64(x);
  }

 private:
  std::array<uint64_t, 4> s_{};
};

}  // namespace seglid
