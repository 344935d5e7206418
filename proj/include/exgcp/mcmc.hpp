#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "exgcp/geometry.hpp"
#include "exgcp/gp_core.hpp"
#include "exgcp/nngp.hpp"
#include "exgcp/random.hpp"

namespace exgcp {

/// Markov Gamma/Beta evolution prior for lambda*_t: lambda*_1 ~ G(a0, b0)
/// discounted by w, lambda*_t = lambda*_{t-1} zeta_t / w.
struct GammaChainPrior {
  double a0 = 100.0;
  double b0 = 10.0;
  double w = 0.0;

  void validate() const;
};

/// Exact dense algebra or the nearest-neighbor approximation.
enum class GpMode { kNngp, kDense };

/// How the thinned points are updated.
///  - kBirthDeath: Metropolis-Hastings births and deaths on the current
///    thinned set. A birth proposes u ~ Uniform(D) with z(u) drawn from its
///    conditional given every current point of the slice; a death removes a
///    uniformly chosen thinned point. Leaves the augmented posterior invariant.
///  - kPoissonThinning: discard the thinned set, then keep each HPP(lambda*)
///    candidate with probability Phi(-z(u)), z(u) conditioned on the observed
///    points and earlier candidates only.
///  - kFixedCount: K ~ Poisson(lambda*|D|) restricted to K >= n first, then
///    exactly K - n thinned points by sequential rejection.
/// Neither regeneration scheme is an exact conditional draw: both ignore that
/// the observed pattern also informs z away from the observed points.
/// kPoissonThinning under-counts thinned points (lambda* biased low);
/// kFixedCount biases lambda* high, less strongly.
enum class ThinningScheme { kBirthDeath, kPoissonThinning, kFixedCount };

/// How the latent block draws z given the augmentation.
///  - kGibbsAugmented: refresh the truncated auxiliary v0 coordinate-wise
///    given z, then draw z | v0 exactly (one Gibbs cycle on (z, v0)).
///  - kSequentialNngp: independent sequential draws of v0 under the NNGP of
///    Gamma truncated at -gamma_i, followed by per-site draws of z.
enum class LatentScheme { kGibbsAugmented, kSequentialNngp };

/// Knobs shared by the per-block samplers.
struct SamplerSettings {
  std::size_t M = 30;
  GpMode mode = GpMode::kNngp;
  ThinningScheme thinning = ThinningScheme::kBirthDeath;
  LatentScheme latent = LatentScheme::kGibbsAugmented;
  std::size_t max_proposals_per_thinned_point = 1'000'000;
  /// Birth-death proposals per iteration, in units of lambda*|D|.
  double birth_death_moves = 1.0;
};

struct ChainConfig {
  std::size_t n_iter = 600;
  std::size_t burn_in = 100;
  std::size_t M = 30;
  SpaceTimeCovParams stp{{1.0, 2.0}, {0.3, 3.0}};
  GammaChainPrior prior;
  bool sample_theta = false;
  double theta_proposal_sd = 0.1;
  std::uint64_t seed = 1;
  std::size_t max_proposals_per_thinned_point = 1'000'000;
  /// Hold lambda*_t at these values instead of sampling them.
  std::optional<std::vector<double>> fixed_lambda_star;
  GpMode mode = GpMode::kNngp;
  ThinningScheme thinning = ThinningScheme::kBirthDeath;
  LatentScheme latent = LatentScheme::kGibbsAugmented;
  double birth_death_moves = 1.0;
  /// Keep thinned locations and values in the recorded draws.
  bool store_thinned = true;
  bool allow_empty = false;
  /// Where a state dump goes on numerical failure (system temp dir if empty).
  std::filesystem::path dump_dir;

  void validate() const;
  SamplerSettings settings() const;
};

/// Augmented state of one time slice. `points` holds the observed events in
/// lexicographic order followed by the thinned points in acceptance order;
/// `z` is aligned with `points`.
struct SliceState {
  std::vector<Point> points;
  std::vector<double> z;
  std::size_t n_observed = 0;
  double lambda_star = 1.0;

  std::size_t K() const { return points.size(); }
  std::size_t m() const { return points.size() - n_observed; }
  std::span<const Point> observed() const { return {points.data(), n_observed}; }
  std::span<const Point> thinned() const { return {points.data() + n_observed, m()}; }
};

struct AugmentedState {
  std::vector<SliceState> slices;
  SpaceTimeCovParams stp;

  std::size_t T() const { return slices.size(); }
  std::vector<std::size_t> K() const;
  std::vector<double> lambda_star() const;

  /// Observed points sorted lexicographically, z = 0, no thinned points,
  /// lambda*_t = (2 n_t + 1) / |D| unless given.
  static AugmentedState initialize(const EventSet& events, const SpaceTimeCovParams& stp,
                                   const Domain& d,
                                   const std::optional<std::vector<double>>& lambda_star = {});
};

/// Prior mean of z_t under the forward random walk: zero for the first slice,
/// otherwise z_{t-1} kriged from the previous slice's current values with the
/// marginal kernel of z_{t-1}.
class PriorMeanField {
 public:
  PriorMeanField(const AugmentedState& state, std::size_t t, const SamplerSettings& settings);

  double at(const Point& p) const;
  Eigen::VectorXd at(std::span<const Point> pts) const;

 private:
  const SliceState* prev_ = nullptr;
  std::unique_ptr<SpatialIndex> index_;
  std::optional<ExpKernel> kernel_;
  std::size_t M_ = 0;
  bool dense_ = false;
  std::vector<double> resid_;
  Eigen::VectorXd alpha_;  // dense mode: C^{-1} z_{t-1}
};

struct ThinningStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
};

/// Draw K ~ Poisson(mean) conditioned on K >= lower: rejection while
/// P(K >= lower) >= 1e-3, inversion of the truncated CDF otherwise.
std::uint64_t truncated_poisson_at_least(double mean, std::uint64_t lower, Rng& rng);

/// Regenerate (K_t, U_t, z on U_t) for slice t.
ThinningStats sample_thinned_slice(AugmentedState& state, std::size_t t, const Domain& d,
                                   const SamplerSettings& settings, Rng& rng);
/// All slices, one substream per (iteration, slice).
std::vector<ThinningStats> sample_thinned(AugmentedState& state, const Domain& d,
                                          const SamplerSettings& settings, std::uint64_t seed,
                                          std::uint64_t iteration);

/// Update z on S_t u U_t given the augmentation.
void sample_latent_slice(AugmentedState& state, std::size_t t, const SamplerSettings& settings,
                         Rng& rng);
void sample_latent(AugmentedState& state, const SamplerSettings& settings, std::uint64_t seed,
                   std::uint64_t iteration);

/// Mean of z | v0 for one slice, mu + C W Gamma^{-1} v0, computed on the path
/// selected by `settings.mode`. Exposed for dense/NNGP agreement checks.
Eigen::VectorXd latent_conditional_mean(const AugmentedState& state, std::size_t t,
                                        const SamplerSettings& settings,
                                        const Eigen::VectorXd& v0);

/// Forward filtering, backward sampling of lambda*_{1:T} given K_{1:T}.
std::vector<double> sample_lambda_star(std::span<const std::size_t> K, const Domain& d,
                                       const GammaChainPrior& prior, Rng& rng);

/// Log prior density of covariance parameters on the (log sigma2, log phi)
/// scale. Empty means flat.
using ThetaLogPrior = std::function<double(const CovParams&)>;
using ThetaProposal = std::function<CovParams(const CovParams&, Rng&)>;

enum class ThetaGroup { kFirst, kLater };

/// NNGP log-density of the innovations driven by one parameter group, with
/// the candidate parameters substituted.
double theta_log_likelihood(const AugmentedState& state, ThetaGroup group,
                            const CovParams& candidate, const SamplerSettings& settings);

struct ThetaStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
};

/// One Metropolis step per parameter group (theta1, then theta when T > 1).
/// The default proposal is a Gaussian random walk of scale `proposal_sd` on
/// (log sigma2, log phi).
ThetaStats sample_theta_mh(AugmentedState& state, const SamplerSettings& settings,
                           double proposal_sd, Rng& rng, const ThetaLogPrior& log_prior = {},
                           const ThetaProposal& proposal = {});

struct SliceDraw {
  double lambda_star = 0.0;
  std::size_t K = 0;
  std::size_t n_observed = 0;
  std::vector<Point> points;
  std::vector<double> z;
};

struct Draw {
  std::vector<SliceDraw> slices;
  SpaceTimeCovParams theta;
};

struct BlockTimes {
  double thinned = 0.0;
  double latent = 0.0;
  double lambda_star = 0.0;
  double theta = 0.0;
};

struct ChainStats {
  std::vector<std::size_t> thinning_proposals;
  std::vector<std::size_t> thinning_accepted;
  ThetaStats theta;
  BlockTimes seconds;
};

struct PosteriorDraws {
  Domain domain{0.0, 1.0, 0.0, 1.0};
  SpaceTimeCovParams stp;
  std::size_t M = 0;
  std::vector<Draw> draws;
  ChainStats stats;

  std::size_t T() const { return draws.empty() ? 0 : draws.front().slices.size(); }
  std::vector<double> lambda_series(std::size_t t) const;
  std::vector<double> K_series(std::size_t t) const;
};

using ProgressFn = std::function<void(std::size_t iteration)>;

/// Gibbs sampler: thinned block, latent block, lambda* block, optional theta
/// step, recording every iteration after burn-in.
PosteriorDraws run_chain(const EventSet& events, const ChainConfig& cfg, const Domain& d,
                         const ProgressFn& progress = {});

}  // namespace exgcp
