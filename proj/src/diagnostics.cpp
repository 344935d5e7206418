#include "exgcp/diagnostics.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "exgcp/errors.hpp"

namespace exgcp {

double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of an empty series");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("variance needs at least two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double inefficiency_factor(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw ValidationError("inefficiency factor needs at least 10 draws");
  const double m = mean(series);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = series[i] - m;
  const double c0 = std::inner_product(c.begin(), c.end(), c.begin(), 0.0) / static_cast<double>(n);
  if (!(c0 > 1e-300 * (1.0 + m * m)))
    throw ValidationError("inefficiency factor is undefined for a constant series");

  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n) / c0;
  };
  // Pairs Gamma_k = rho_{2k} + rho_{2k+1}; stop at the first non-positive pair.
  double sum = -1.0;  // rho_0 enters the first pair and is removed here
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (!(pair > 0.0)) break;
    sum += 2.0 * pair;
  }
  // sum now equals 1 + 2 sum_{j>=1} rho_j over the retained lags.
  return std::max(sum, 0.0);
}

double effective_sample_size(std::span<const double> series) {
  return static_cast<double>(series.size()) / inefficiency_factor(series);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw ValidationError("correlation needs two sequences of equal length >= 2");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw ValidationError("correlation of a constant sequence");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace exgcp
