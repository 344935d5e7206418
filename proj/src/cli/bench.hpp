#pragma once

#include <vector>

#include "cli/config.hpp"

namespace exgcp::cli {

struct BenchPoint {
  std::size_t K = 0;
  std::size_t M = 0;
  bool dense = false;
  double latent_seconds = 0.0;
  double thinned_seconds = 0.0;
  double lambda_seconds = 0.0;
};

struct BenchSettings {
  std::vector<std::size_t> sizes{500, 1000, 2000};
  std::size_t M = 10;
  std::vector<std::size_t> M_values{5, 15, 30};
  std::size_t M_sweep_K = 1000;
  std::vector<std::size_t> dense_sizes{200, 400};
  /// Points per unit area; the domain grows with K so the local geometry,
  /// and with it the conjugate-gradient iteration count, stays fixed.
  double density = 10.0;
  std::size_t repeats = 7;
  std::uint64_t seed = 1;
};

struct BenchReport {
  std::vector<BenchPoint> nngp;
  std::vector<BenchPoint> m_sweep;
  std::vector<BenchPoint> dense;
  double nngp_exponent = 0.0;
  double dense_exponent = 0.0;
};

/// Best-of-repeats wall clock per Gibbs block on synthetic slices.
BenchReport run_bench(const BenchSettings& settings);

/// Least-squares slope of log(time) on log(K).
double fit_exponent(const std::vector<BenchPoint>& points);

Json bench_to_json(const BenchReport& report);

}  // namespace exgcp::cli
