#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "exgcp/geometry.hpp"
#include "exgcp/gp_core.hpp"
#include "exgcp/random.hpp"

namespace exgcp {

struct SimOptions {
  /// Latent draws use the dense GP up to this many points, the NNGP prior beyond.
  std::size_t dense_limit = 3000;
  /// Neighbor budget for the NNGP prior.
  std::size_t M = 30;
};

/// Ground truth for one slice: the homogeneous scatter, its latent values and
/// the thinning outcome.
struct SliceTruth {
  std::vector<Point> points;
  std::vector<double> z;
  std::vector<char> retained;
};

struct SimOutput {
  EventSet events;   // retained points
  EventSet thinned;  // rejected points
  std::vector<SliceTruth> latent;
  std::vector<double> lambda_star;
};

std::vector<Point> simulate_hpp(double lambda_star, const Domain& d, Rng& rng);

/// Random-walk latent field z_t = z_{t-1} + eta_t on fixed per-slice
/// locations. Built from independent innovation fields: eta_k is drawn once
/// over the union of slices k..T-1, so z_t(s) = sum_{k<=t} eta_k(s) has the
/// exact joint law of the recursion at every location.
std::vector<Eigen::VectorXd> simulate_latent_spacetime(
    const std::vector<std::vector<Point>>& slices, const SpaceTimeCovParams& stp, Rng& rng,
    const SimOptions& options = {});

SimOutput simulate_exgcp_spacetime(std::span<const double> lambda_star,
                                   const SpaceTimeCovParams& stp, const Domain& d, Rng& rng,
                                   const SimOptions& options = {});

/// Single-slice case of simulate_exgcp_spacetime with theta1 = p.
SimOutput simulate_exgcp_spatial(double lambda_star, const CovParams& p, const Domain& d,
                                 Rng& rng, const SimOptions& options = {});

}  // namespace exgcp
