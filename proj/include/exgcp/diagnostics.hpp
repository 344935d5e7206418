#pragma once

#include <span>

namespace exgcp {

/// Integrated autocorrelation time 1 + 2 sum rho_k, truncated with Geyer's
/// initial positive sequence. Needs at least 10 values; a constant series
/// raises ValidationError.
double inefficiency_factor(std::span<const double> series);

/// n / inefficiency_factor.
double effective_sample_size(std::span<const double> series);

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);

/// Pearson correlation of two equal-length sequences.
double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace exgcp
