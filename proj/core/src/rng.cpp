#include "potkit/rng.hpp"

#include <cmath>

namespace potkit {

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; u1 is kept away from 0 so the log is finite.
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  cached_normal_ = mag * std::sin(kTwoPi * u2);
  have_cached_normal_ = true;
  return mag * std::cos(kTwoPi * u2);
}

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw ParameterError("gamma: shape and scale must be positive");
  }
  if (shape < 1.0) {
    // Boost to shape + 1 and correct with a power of a uniform.
    const double g = gamma(shape + 1.0, 1.0);
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return scale * g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return scale * d * v;
    }
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

long Rng::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("poisson: lambda must be >= 0");
  if (lambda == 0.0) return 0;
  // Product-of-uniforms; fine for the moderate rates used here.
  const double l = std::exp(-lambda);
  long k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01();
  } while (p > l);
  return k - 1;
}

long Rng::binomial(long trials, double p) {
  if (trials < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw ParameterError("binomial: need trials >= 0 and p in [0, 1]");
  }
  long hits = 0;
  for (long t = 0; t < trials; ++t) {
    if (uniform01() < p) ++hits;
  }
  return hits;
}

}  // namespace potkit
