#pragma once

#include <cstdint>

#include "potkit/errors.hpp"

namespace potkit {

// SplitMix64; used to expand user seeds into generator state.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

// xoshiro256++ with all sampling transforms implemented in-repo, so streams
// are identical for a given seed on every platform this builds on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
    have_cached_normal_ = false;
  }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal();                         // standard normal, Box-Muller
  double normal(double mu, double sigma) { return mu + sigma * normal(); }
  double gamma(double shape, double scale);  // Marsaglia-Tsang
  double beta(double a, double b);
  long poisson(double lambda);             // Knuth product method
  long binomial(long trials, double p);

 private:
  std::uint64_t s_[4];
  bool have_cached_normal_;
  double cached_normal_ = 0.0;
};

}  // namespace potkit
