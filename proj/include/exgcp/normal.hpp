#pragma once

namespace exgcp {

/// Standard normal CDF, erfc-based so both tails keep relative accuracy.
double normal_cdf(double x);
/// log Phi(x), stable for large negative x.
double normal_log_cdf(double x);
/// Phi^{-1}(p) for p in (0, 1).
double normal_quantile(double p);
/// x such that 1 - Phi(x) = q, accurate for tiny q.
double normal_upper_quantile(double q);
double normal_log_pdf(double x, double mean, double var);

}  // namespace exgcp
