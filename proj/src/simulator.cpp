#include "exgcp/simulator.hpp"

#include <cmath>

#include "exgcp/errors.hpp"
#include "exgcp/nngp.hpp"

namespace exgcp {

std::vector<Point> simulate_hpp(double lambda_star, const Domain& d, Rng& rng) {
  if (!(lambda_star >= 0.0) || !std::isfinite(lambda_star))
    throw ValidationError("homogeneous Poisson rate must be finite and non-negative");
  const std::uint64_t n = rng.poisson(lambda_star * d.area());
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = rng.uniform(d.x_min(), d.x_max());
    const double y = rng.uniform(d.y_min(), d.y_max());
    pts.push_back({x, y});
  }
  return pts;
}

namespace {

Eigen::VectorXd draw_gaussian_field(std::span<const Point> pts, const ExpKernel& kernel, Rng& rng,
                                    const SimOptions& options) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  if (n == 0) return {};
  if (pts.size() <= options.dense_limit) {
    Eigen::LLT<Eigen::MatrixXd> llt(covariance_matrix(pts, kernel));
    if (llt.info() != Eigen::Success)
      throw NumericalError("simulator: dense covariance is not positive definite");
    Eigen::VectorXd xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = rng.normal();
    return llt.matrixL() * xi;
  }
  const auto graph = build_neighbor_graph(pts, options.M);
  const auto factor = nngp_factor(graph, pts, kernel);
  return nngp_sample_prior(factor, Eigen::VectorXd::Zero(n), rng);
}

}  // namespace

std::vector<Eigen::VectorXd> simulate_latent_spacetime(
    const std::vector<std::vector<Point>>& slices, const SpaceTimeCovParams& stp, Rng& rng,
    const SimOptions& options) {
  stp.validate();
  const std::size_t T = slices.size();
  std::vector<Eigen::VectorXd> z(T);
  for (std::size_t t = 0; t < T; ++t) z[t] = Eigen::VectorXd::Zero(slices[t].size());
  for (std::size_t k = 0; k < T; ++k) {
    std::vector<Point> uni;
    for (std::size_t t = k; t < T; ++t) uni.insert(uni.end(), slices[t].begin(), slices[t].end());
    const Eigen::VectorXd eta = draw_gaussian_field(uni, ExpKernel(stp.innovation(k)), rng, options);
    Eigen::Index offset = 0;
    for (std::size_t t = k; t < T; ++t) {
      const auto len = static_cast<Eigen::Index>(slices[t].size());
      z[t] += eta.segment(offset, len);
      offset += len;
    }
  }
  return z;
}

SimOutput simulate_exgcp_spacetime(std::span<const double> lambda_star,
                                   const SpaceTimeCovParams& stp, const Domain& d, Rng& rng,
                                   const SimOptions& options) {
  const std::size_t T = lambda_star.size();
  if (T == 0) throw ValidationError("simulator needs at least one time slice");
  stp.validate();
  std::vector<std::vector<Point>> scatter(T);
  for (std::size_t t = 0; t < T; ++t) scatter[t] = simulate_hpp(lambda_star[t], d, rng);
  const auto z = simulate_latent_spacetime(scatter, stp, rng, options);

  SimOutput out{EventSet(T), EventSet(T), std::vector<SliceTruth>(T),
                std::vector<double>(lambda_star.begin(), lambda_star.end())};
  for (std::size_t t = 0; t < T; ++t) {
    auto& truth = out.latent[t];
    truth.points = std::move(scatter[t]);
    truth.z.assign(z[t].data(), z[t].data() + z[t].size());
    truth.retained.resize(truth.points.size());
    for (std::size_t i = 0; i < truth.points.size(); ++i) {
      if (!std::isfinite(truth.z[i])) throw NumericalError("simulator produced a non-finite latent value");
      const bool keep = rng.uniform() < normal_cdf(truth.z[i]);
      truth.retained[i] = keep ? 1 : 0;
      (keep ? out.events : out.thinned).add(t, truth.points[i]);
    }
  }
  return out;
}

SimOutput simulate_exgcp_spatial(double lambda_star, const CovParams& p, const Domain& d,
                                 Rng& rng, const SimOptions& options) {
  const double rate[1] = {lambda_star};
  return simulate_exgcp_spacetime(rate, SpaceTimeCovParams{p, p}, d, rng, options);
}

}  // namespace exgcp
