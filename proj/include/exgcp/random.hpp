#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace exgcp {

/// splitmix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Seed for the substream identified by `path` under a root seed. The same
/// (seed, path) always gives the same stream, regardless of call order or
/// thread count.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

/// Pseudo-random source with platform-independent variate generators.
///
/// All variates are built from the raw 64-bit output of mt19937_64 with
/// fixed algorithms (inversion for normals and Poisson counts, Marsaglia-Tsang
/// for gammas), so a seed reproduces the same stream on every standard
/// library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(seed, path));
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma with shape `shape` and rate `rate` (mean shape/rate).
  double gamma(double shape, double rate);
  double beta(double a, double b);
  std::uint64_t poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  double standard_gamma(double shape);

  std::mt19937_64 engine_;
};

/// Draw from N(0,1) restricted to (lower, inf). Inverse-CDF within the
/// accurate range of the quantile function, exponential-proposal rejection
/// in the far tail.
double truncated_normal_above(double lower, Rng& rng);

}  // namespace exgcp
