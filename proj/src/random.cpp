#include "exgcp/random.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "exgcp/errors.hpp"
#include "exgcp/normal.hpp"

namespace exgcp {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix_seed(seed);
  for (std::uint64_t p : path) h = mix_seed(h ^ mix_seed(p + 0x632be59bd9b4e019ULL));
  return h;
}

double Rng::uniform() {
  // 53 random bits, offset by half an ulp so 0 and 1 are never returned.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_quantile(uniform()); }

double Rng::standard_gamma(double shape) {
  if (shape < 1.0) {
    const double g = standard_gamma(shape + 1.0);
    return g * std::exp(std::log(uniform()) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw ValidationError("gamma variate needs positive shape and rate");
  return standard_gamma(shape) / rate;
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw ValidationError("Poisson mean must be finite and non-negative");
  if (mean == 0.0) return 0;
  const double u = uniform();
  // Inversion, starting the search at the mode so large means cost O(sqrt(mean)).
  std::uint64_t k = static_cast<std::uint64_t>(std::floor(mean));
  double p = std::exp(static_cast<double>(k) * std::log(mean) - mean -
                      std::lgamma(static_cast<double>(k) + 1.0));
  // P(X <= k) = Q(k + 1, mean), the regularized upper incomplete gamma.
  double cdf = boost::math::gamma_q(static_cast<double>(k) + 1.0, mean);
  if (u <= cdf) {
    while (k > 0 && u <= cdf - p) {
      cdf -= p;
      p *= static_cast<double>(k) / mean;
      --k;
    }
    return k;
  }
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && cdf < u) break;  // u in the unrepresentable upper tail
  }
  return k;
}

double truncated_normal_above(double lower, Rng& rng) {
  constexpr double kInversionLimit = 8.0;
  if (lower <= kInversionLimit) {
    const double tail = normal_cdf(-lower);
    for (;;) {
      const double x = normal_upper_quantile(rng.uniform() * tail);
      if (x > lower) return x;
    }
  }
  // Robert (1995) translated-exponential proposal.
  const double alpha = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double z = lower - std::log(rng.uniform()) / alpha;
    const double r = z - alpha;
    if (std::log(rng.uniform()) <= -0.5 * r * r) return z;
  }
}

}  // namespace exgcp
