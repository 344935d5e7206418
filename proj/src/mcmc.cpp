#include "exgcp/mcmc.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "exgcp/errors.hpp"
#include "exgcp/normal.hpp"

namespace exgcp {

namespace {

// Substream tags; one stream per (block, iteration, slice).
enum StreamTag : std::uint64_t { kThinnedStream = 1, kLatentStream = 2, kLambdaStream = 3, kThetaStream = 4 };

constexpr double kCgTolerance = 1e-12;
constexpr std::size_t kCgMaxIterations = 5000;

void require_finite(const std::vector<double>& z, std::size_t t) {
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!std::isfinite(z[i]))
      throw NumericalError("non-finite latent value at point " + std::to_string(i) +
                           " of slice t=" + std::to_string(t + 1));
}

Eigen::VectorXd standard_normals(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Eigen::VectorXd design_signs(const SliceState& s) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(s.K()));
  for (std::size_t i = 0; i < s.K(); ++i) w[i] = i < s.n_observed ? 1.0 : -1.0;
  return w;
}

// Solves (I + C~) y = b by conjugate gradients; C~ is applied through the
// sparse factor in O(nM). The spectrum of I + C~ lies in [1, 1 + lambda_max],
// so the iteration count depends on point density, not on n.
Eigen::VectorXd solve_identity_plus_covariance(const SparseFactor& f, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rs = r.squaredNorm();
  const double stop = kCgTolerance * kCgTolerance * std::max(rs, 1e-300);
  if (rs == 0.0) return x;
  for (std::size_t it = 0; it < kCgMaxIterations; ++it) {
    const Eigen::VectorXd ap = p + apply_covariance(f, p);
    const double alpha = rs / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rs_new = r.squaredNorm();
    if (rs_new <= stop) return x;
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  throw NumericalError("conjugate gradients failed to converge in the latent block");
}

std::unique_ptr<SequentialConditioner> make_conditioner(const SamplerSettings& settings,
                                                        const Domain& d, const ExpKernel& kernel,
                                                        std::size_t expected) {
  if (settings.mode == GpMode::kDense) return std::make_unique<DenseConditioner>(kernel);
  return std::make_unique<NeighborConditioner>(d, kernel, settings.M, expected);
}

}  // namespace

void GammaChainPrior::validate() const {
  if (!(a0 > 0.0) || !(b0 > 0.0)) throw ValidationError("Gamma prior needs a0 > 0 and b0 > 0");
  if (!(w >= 0.0 && w < 1.0)) throw ValidationError("discount w must lie in [0, 1)");
}

void ChainConfig::validate() const {
  if (!(n_iter > burn_in)) throw ValidationError("n_iter must exceed burn_in");
  if (M < 1) throw ValidationError("neighbor budget M must be at least 1");
  stp.validate();
  prior.validate();
  if (sample_theta && !(theta_proposal_sd > 0.0))
    throw ValidationError("theta proposal sd must be positive");
  if (max_proposals_per_thinned_point < 1)
    throw ValidationError("proposal cap must be positive");
  if (!(birth_death_moves > 0.0)) throw ValidationError("birth-death move rate must be positive");
  if (fixed_lambda_star)
    for (double l : *fixed_lambda_star)
      if (!(l > 0.0)) throw ValidationError("fixed lambda* values must be positive");
}

SamplerSettings ChainConfig::settings() const {
  return SamplerSettings{M, mode, thinning, latent, max_proposals_per_thinned_point,
                         birth_death_moves};
}

std::vector<std::size_t> AugmentedState::K() const {
  std::vector<std::size_t> k;
  for (const auto& s : slices) k.push_back(s.K());
  return k;
}

std::vector<double> AugmentedState::lambda_star() const {
  std::vector<double> l;
  for (const auto& s : slices) l.push_back(s.lambda_star);
  return l;
}

AugmentedState AugmentedState::initialize(const EventSet& events, const SpaceTimeCovParams& stp,
                                          const Domain& d,
                                          const std::optional<std::vector<double>>& lambda_star) {
  if (lambda_star && lambda_star->size() != events.T())
    throw ValidationError("fixed lambda* needs one value per time slice");
  AugmentedState state;
  state.stp = stp;
  state.slices.resize(events.T());
  for (std::size_t t = 0; t < events.T(); ++t) {
    const auto& obs = events.slice(t);
    auto& s = state.slices[t];
    for (std::size_t i : lexicographic_order(obs)) s.points.push_back(obs[i]);
    s.z.assign(obs.size(), 0.0);
    s.n_observed = obs.size();
    s.lambda_star = lambda_star ? (*lambda_star)[t]
                                : (2.0 * static_cast<double>(obs.size()) + 1.0) / d.area();
  }
  return state;
}

PriorMeanField::PriorMeanField(const AugmentedState& state, std::size_t t,
                               const SamplerSettings& settings) {
  if (t == 0 || state.slices[t - 1].K() == 0) return;
  prev_ = &state.slices[t - 1];
  kernel_.emplace(ExpKernel::cumulative(state.stp, t - 1));
  M_ = settings.M;
  if (settings.mode == GpMode::kDense) {
    dense_ = true;
    Eigen::LLT<Eigen::MatrixXd> llt(covariance_matrix(prev_->points, *kernel_));
    if (llt.info() != Eigen::Success)
      throw NumericalError("prior mean: previous-slice covariance is not positive definite");
    alpha_ = llt.solve(Eigen::Map<const Eigen::VectorXd>(prev_->z.data(),
                                                        static_cast<Eigen::Index>(prev_->K())));
    return;
  }
  index_ = std::make_unique<SpatialIndex>(SpatialIndex::bounding_box(prev_->points), prev_->K());
  for (const auto& p : prev_->points) index_->insert(p);
  resid_ = prev_->z;
}

double PriorMeanField::at(const Point& p) const {
  if (!prev_) return 0.0;
  if (dense_) return cross_covariance(prev_->points, p, *kernel_).dot(alpha_);
  std::vector<std::size_t> nb;
  index_->nearest(p, M_, nb);
  return conditional_from(prev_->points, nb, resid_, p, 0.0, *kernel_).mean;
}

Eigen::VectorXd PriorMeanField::at(std::span<const Point> pts) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pts.size()));
  if (!prev_) return out;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = at(pts[i]);
  return out;
}

std::uint64_t truncated_poisson_at_least(double mean, std::uint64_t lower, Rng& rng) {
  if (!(mean > 0.0)) {
    if (lower == 0) return 0;
    throw ValidationError("truncated Poisson: zero mean cannot reach the lower bound");
  }
  if (lower == 0) return rng.poisson(mean);
  const double lo = static_cast<double>(lower);
  // P(K >= lower) = P(lower, mean), the regularized lower incomplete gamma.
  const double mass = boost::math::gamma_p(lo, mean);
  if (mass >= 1e-3) {
    for (;;) {
      const std::uint64_t k = rng.poisson(mean);
      if (k >= lower) return k;
    }
  }
  // Inversion in log space: walk up from `lower` accumulating the normalized pmf.
  const double log_mass = std::log(boost::math::gamma_p(lo, mean));
  double log_p = lo * std::log(mean) - mean - std::lgamma(lo + 1.0) - log_mass;
  const double u = rng.uniform();
  double cdf = std::exp(log_p);
  std::uint64_t k = lower;
  while (cdf < u) {
    ++k;
    log_p += std::log(mean / static_cast<double>(k));
    const double p = std::exp(log_p);
    cdf += p;
    if (p < 1e-300 && static_cast<double>(k) > mean) break;
  }
  return k;
}

namespace {

void check_candidate_cap(double mean_count, std::size_t t, const SamplerSettings& settings) {
  if (mean_count > static_cast<double>(settings.max_proposals_per_thinned_point))
    throw RunawayThinningError("slice t=" + std::to_string(t + 1) + ": expected " +
                                   std::to_string(mean_count) +
                                   " thinning candidates exceeds the proposal cap",
                               t, 0.0);
}

ThinningStats birth_death_slice(AugmentedState& state, std::size_t t, const Domain& d,
                                const SamplerSettings& settings, Rng& rng) {
  auto& s = state.slices.at(t);
  const std::size_t n = s.n_observed;
  const double mean_count = s.lambda_star * d.area();
  check_candidate_cap(mean_count, t, settings);
  const double log_mean_count = std::log(mean_count);
  const ExpKernel kernel(state.stp.innovation(t));
  const PriorMeanField prior(state, t, settings);
  const Eigen::VectorXd mu = prior.at(s.points);

  // Conditioner indices track positions in s.points: births append, deaths
  // swap the last point into the hole on both sides.
  auto cond = make_conditioner(settings, d, kernel, s.K() + static_cast<std::size_t>(mean_count) + 1);
  for (std::size_t i = 0; i < s.K(); ++i) cond->add(s.points[i], s.z[i], mu[i]);

  const auto moves = static_cast<std::size_t>(std::ceil(settings.birth_death_moves * mean_count));
  ThinningStats stats;
  for (std::size_t r = 0; r < moves; ++r) {
    const double m = static_cast<double>(s.m());
    ++stats.proposals;
    if (rng.uniform() < 0.5) {
      const Point u{rng.uniform(d.x_min(), d.x_max()), rng.uniform(d.y_min(), d.y_max())};
      const double mu_u = prior.at(u);
      const Moments mom = cond->moments(u, mu_u);
      const double zu = mom.mean + std::sqrt(mom.var) * rng.normal();
      const double log_ratio = log_mean_count + normal_log_cdf(-zu) - std::log(m + 1.0);
      if (std::log(rng.uniform()) < log_ratio) {
        s.points.push_back(u);
        s.z.push_back(zu);
        cond->add(u, zu, mu_u);
        ++stats.accepted;
      }
    } else if (m > 0.0) {
      const std::size_t j = n + std::min(s.m() - 1, static_cast<std::size_t>(rng.uniform() * m));
      const double log_ratio = std::log(m) - log_mean_count - normal_log_cdf(-s.z[j]);
      if (std::log(rng.uniform()) < log_ratio) {
        s.points[j] = s.points.back();
        s.z[j] = s.z.back();
        s.points.pop_back();
        s.z.pop_back();
        cond->remove_swap_last(j);
        ++stats.accepted;
      }
    }
  }
  return stats;
}

}  // namespace

ThinningStats sample_thinned_slice(AugmentedState& state, std::size_t t, const Domain& d,
                                   const SamplerSettings& settings, Rng& rng) {
  if (settings.thinning == ThinningScheme::kBirthDeath)
    return birth_death_slice(state, t, d, settings, rng);
  auto& s = state.slices.at(t);
  const std::size_t n = s.n_observed;
  s.points.resize(n);
  s.z.resize(n);
  const double mean_count = s.lambda_star * d.area();
  const ExpKernel kernel(state.stp.innovation(t));
  const PriorMeanField prior(state, t, settings);
  const Eigen::VectorXd obs_mean = prior.at(s.observed());

  auto cond = make_conditioner(settings, d, kernel,
                               n + static_cast<std::size_t>(std::ceil(mean_count)) + 1);
  for (std::size_t i = 0; i < n; ++i) cond->add(s.points[i], s.z[i], obs_mean[i]);

  ThinningStats stats;
  auto propose = [&](Point& u, double& zu, double& mu) {
    u = Point{rng.uniform(d.x_min(), d.x_max()), rng.uniform(d.y_min(), d.y_max())};
    mu = prior.at(u);
    const Moments mom = cond->moments(u, mu);
    zu = mom.mean + std::sqrt(mom.var) * rng.normal();
    ++stats.proposals;
    return rng.uniform() < normal_cdf(-zu);
  };

  if (settings.thinning == ThinningScheme::kPoissonThinning) {
    check_candidate_cap(mean_count, t, settings);
    const std::uint64_t candidates = rng.poisson(mean_count);
    for (std::uint64_t r = 0; r < candidates; ++r) {
      Point u;
      double zu = 0.0, mu = 0.0;
      if (propose(u, zu, mu)) {
        s.points.push_back(u);
        s.z.push_back(zu);
        ++stats.accepted;
      }
      // Every candidate's latent value was drawn, so later candidates condition on it.
      cond->add(u, zu, mu);
    }
    return stats;
  }

  const std::uint64_t K = truncated_poisson_at_least(mean_count, n, rng);
  for (std::uint64_t j = n; j < K; ++j) {
    std::size_t tries = 0;
    for (;;) {
      if (++tries > settings.max_proposals_per_thinned_point) {
        const double rate = static_cast<double>(stats.accepted) /
                            static_cast<double>(std::max<std::size_t>(stats.proposals, 1));
        std::ostringstream msg;
        msg << "runaway thinning in slice t=" << t + 1 << ": " << tries - 1
            << " proposals without an acceptance (acceptance-rate estimate " << rate << ")";
        throw RunawayThinningError(msg.str(), t, rate);
      }
      Point u;
      double zu = 0.0, mu = 0.0;
      if (propose(u, zu, mu)) {
        s.points.push_back(u);
        s.z.push_back(zu);
        cond->add(u, zu, mu);
        ++stats.accepted;
        break;
      }
    }
  }
  return stats;
}

std::vector<ThinningStats> sample_thinned(AugmentedState& state, const Domain& d,
                                          const SamplerSettings& settings, std::uint64_t seed,
                                          std::uint64_t iteration) {
  std::vector<ThinningStats> stats(state.T());
  for (std::size_t t = 0; t < state.T(); ++t) {
    Rng rng = Rng::substream(seed, {kThinnedStream, iteration, t});
    stats[t] = sample_thinned_slice(state, t, d, settings, rng);
  }
  return stats;
}

namespace {

void latent_gibbs_augmented(SliceState& s, const ExpKernel& kernel, const Eigen::VectorXd& mu,
                            const SamplerSettings& settings, Rng& rng) {
  const auto K = static_cast<Eigen::Index>(s.K());
  const Eigen::VectorXd w = design_signs(s);
  // v0 | z: v0_i = w_i (z_i - mu_i) + e_i with e_i ~ N(0,1) restricted to w_i z_i + e_i > 0.
  Eigen::VectorXd v0(K);
  for (Eigen::Index i = 0; i < K; ++i)
    v0[i] = w[i] * (s.z[i] - mu[i]) + truncated_normal_above(-w[i] * s.z[i], rng);

  // z | v0 by conditioning a joint prior draw (eta, W eta + e'):
  //   z = mu + eta + C W Gamma^{-1} (v0 - W eta - e'),  Gamma = I + W C W,
  // and C W Gamma^{-1} r = W r - (I + C)^{-1} W r because W^2 = I.
  Eigen::VectorXd eta, y, b;
  if (settings.mode == GpMode::kDense) {
    Eigen::MatrixXd c = covariance_matrix(s.points, kernel);
    Eigen::LLT<Eigen::MatrixXd> chol_c(c);
    if (chol_c.info() != Eigen::Success)
      throw NumericalError("latent block: covariance is not positive definite");
    eta = chol_c.matrixL() * standard_normals(K, rng);
    const Eigen::VectorXd e = standard_normals(K, rng);
    b = w.cwiseProduct(v0 - w.cwiseProduct(eta) - e);
    c.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> chol_g(c);
    y = chol_g.solve(b);
  } else {
    const auto graph = build_neighbor_graph(s.points, settings.M);
    const auto factor = nngp_factor(graph, s.points, kernel);
    eta = nngp_sample_prior(factor, Eigen::VectorXd::Zero(K), rng);
    const Eigen::VectorXd e = standard_normals(K, rng);
    b = w.cwiseProduct(v0 - w.cwiseProduct(eta) - e);
    y = solve_identity_plus_covariance(factor, b);
  }
  const Eigen::VectorXd z = mu + eta + b - y;
  s.z.assign(z.data(), z.data() + K);
}

void latent_sequential(SliceState& s, const ExpKernel& kernel, const Eigen::VectorXd& mu,
                       const SamplerSettings& settings, Rng& rng) {
  const std::size_t K = s.K();
  const Eigen::VectorXd w = design_signs(s);
  const double cdiag = kernel.variance() + kernel.jitter();
  auto c_at = [&](std::size_t i, std::size_t j) {
    return i == j ? cdiag : kernel(s.points[i], s.points[j]);
  };
  auto gamma_at = [&](std::size_t i, std::size_t j) {
    return (i == j ? 1.0 : 0.0) + w[i] * w[j] * c_at(i, j);
  };
  const std::size_t M = settings.mode == GpMode::kDense ? std::max<std::size_t>(K, 1) : settings.M;
  const auto graph = build_neighbor_graph(s.points, M);
  const auto gfac = nngp_factor_from(graph, gamma_at);

  // v0_i from its neighbor-conditioned Gaussian under Gamma, truncated at -gamma_i.
  Eigen::VectorXd v0(static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < K; ++i) {
    double m = 0.0;
    for (std::size_t k = 0; k < graph.neighbors[i].size(); ++k)
      m += gfac.coef[i][k] * v0[graph.neighbors[i][k]];
    const double sd = std::sqrt(gfac.d[i]);
    const double gamma_i = w[i] * mu[i];
    v0[i] = m + sd * truncated_normal_above((-gamma_i - m) / sd, rng);
  }

  // z_i given v0 on N_i and i itself.
  Eigen::VectorXd mean(static_cast<Eigen::Index>(K)), var(static_cast<Eigen::Index>(K));
  std::vector<int> failed(K, 0);
#pragma omp parallel for schedule(dynamic, 32)
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<std::size_t> set = graph.neighbors[i];
    set.push_back(i);
    const auto m = static_cast<Eigen::Index>(set.size());
    Eigen::MatrixXd g(m, m);
    Eigen::VectorXd delta(m), v(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      delta[a] = c_at(i, set[a]) * w[set[a]];
      v[a] = v0[set[a]];
      for (Eigen::Index bb = 0; bb <= a; ++bb) g(a, bb) = g(bb, a) = gamma_at(set[a], set[bb]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) {
      failed[i] = 1;
      continue;
    }
    const Eigen::VectorXd sol = llt.solve(delta);
    mean[i] = mu[i] + sol.dot(v);
    var[i] = cdiag - sol.dot(delta);
  }
  for (std::size_t i = 0; i < K; ++i)
    if (failed[i]) throw NumericalError("latent block: Gamma neighbor block is singular");
  for (std::size_t i = 0; i < K; ++i)
    s.z[i] = mean[i] + std::sqrt(clamp_variance(var[i])) * rng.normal();
}

}  // namespace

void sample_latent_slice(AugmentedState& state, std::size_t t, const SamplerSettings& settings,
                         Rng& rng) {
  auto& s = state.slices.at(t);
  if (s.K() == 0) return;
  const ExpKernel kernel(state.stp.innovation(t));
  const Eigen::VectorXd mu = PriorMeanField(state, t, settings).at(s.points);
  if (settings.latent == LatentScheme::kGibbsAugmented)
    latent_gibbs_augmented(s, kernel, mu, settings, rng);
  else
    latent_sequential(s, kernel, mu, settings, rng);
  require_finite(s.z, t);
}

void sample_latent(AugmentedState& state, const SamplerSettings& settings, std::uint64_t seed,
                   std::uint64_t iteration) {
  for (std::size_t t = 0; t < state.T(); ++t) {
    Rng rng = Rng::substream(seed, {kLatentStream, iteration, t});
    sample_latent_slice(state, t, settings, rng);
  }
}

Eigen::VectorXd latent_conditional_mean(const AugmentedState& state, std::size_t t,
                                        const SamplerSettings& settings,
                                        const Eigen::VectorXd& v0) {
  const auto& s = state.slices.at(t);
  if (v0.size() != static_cast<Eigen::Index>(s.K()))
    throw ValidationError("latent_conditional_mean: v0 must have one entry per point");
  const ExpKernel kernel(state.stp.innovation(t));
  const Eigen::VectorXd mu = PriorMeanField(state, t, settings).at(s.points);
  const Eigen::VectorXd b = design_signs(s).cwiseProduct(v0);
  Eigen::VectorXd y;
  if (settings.mode == GpMode::kDense) {
    Eigen::MatrixXd c = covariance_matrix(s.points, kernel);
    c.diagonal().array() += 1.0;
    y = c.llt().solve(b);
  } else {
    const auto graph = build_neighbor_graph(s.points, settings.M);
    y = solve_identity_plus_covariance(nngp_factor(graph, s.points, kernel), b);
  }
  return mu + b - y;
}

std::vector<double> sample_lambda_star(std::span<const std::size_t> K, const Domain& d,
                                       const GammaChainPrior& prior, Rng& rng) {
  prior.validate();
  const std::size_t T = K.size();
  if (T == 0) return {};
  std::vector<double> a(T), b(T);
  double a_prev = prior.a0, b_prev = prior.b0;
  for (std::size_t t = 0; t < T; ++t) {
    a[t] = prior.w * a_prev + static_cast<double>(K[t]);
    b[t] = prior.w * b_prev + d.area();
    a_prev = a[t];
    b_prev = b[t];
  }
  for (std::size_t t = 0; t < T; ++t)
    if (!(a[t] > 0.0))
      throw ValidationError("lambda* conditional is improper: K_t = 0 with w = 0 at t=" +
                            std::to_string(t + 1));
  std::vector<double> lambda(T);
  lambda[T - 1] = rng.gamma(a[T - 1], b[T - 1]);
  for (std::size_t t = T - 1; t-- > 0;)
    lambda[t] = prior.w * lambda[t + 1] + rng.gamma((1.0 - prior.w) * a[t], b[t]);
  return lambda;
}

double theta_log_likelihood(const AugmentedState& state, ThetaGroup group,
                            const CovParams& candidate, const SamplerSettings& settings) {
  const std::size_t first = group == ThetaGroup::kFirst ? 0 : 1;
  const std::size_t last = group == ThetaGroup::kFirst ? std::min<std::size_t>(1, state.T())
                                                       : state.T();
  const ExpKernel kernel(candidate);
  double total = 0.0;
  for (std::size_t t = first; t < last; ++t) {
    const auto& s = state.slices[t];
    if (s.K() == 0) continue;
    const Eigen::VectorXd mean = PriorMeanField(state, t, settings).at(s.points);
    const Eigen::Map<const Eigen::VectorXd> z(s.z.data(), static_cast<Eigen::Index>(s.K()));
    if (settings.mode == GpMode::kDense) {
      total += DenseGP(s.points, kernel, mean).log_density(z);
    } else {
      const auto graph = build_neighbor_graph(s.points, settings.M);
      total += nngp_log_density(nngp_factor(graph, s.points, kernel), z, mean);
    }
  }
  return total;
}

ThetaStats sample_theta_mh(AugmentedState& state, const SamplerSettings& settings,
                           double proposal_sd, Rng& rng, const ThetaLogPrior& log_prior,
                           const ThetaProposal& proposal) {
  ThetaStats stats;
  const ThetaGroup groups[2] = {ThetaGroup::kFirst, ThetaGroup::kLater};
  for (ThetaGroup g : groups) {
    if (g == ThetaGroup::kLater && state.T() < 2) break;
    CovParams& current = g == ThetaGroup::kFirst ? state.stp.theta1 : state.stp.theta;
    CovParams cand;
    if (proposal) {
      cand = proposal(current, rng);
    } else {
      cand.sigma2 = current.sigma2 * std::exp(proposal_sd * rng.normal());
      cand.phi = current.phi * std::exp(proposal_sd * rng.normal());
    }
    const double log_u = std::log(rng.uniform());
    ++stats.proposed;
    if (!(cand.sigma2 > 0.0) || !(cand.phi > 0.0)) continue;
    const double lp_cur = log_prior ? log_prior(current) : 0.0;
    const double lp_new = log_prior ? log_prior(cand) : 0.0;
    const double ratio = theta_log_likelihood(state, g, cand, settings) + lp_new -
                         theta_log_likelihood(state, g, current, settings) - lp_cur;
    if (log_u < ratio) {
      current = cand;
      ++stats.accepted;
    }
  }
  return stats;
}

std::vector<double> PosteriorDraws::lambda_series(std::size_t t) const {
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& d : draws) v.push_back(d.slices.at(t).lambda_star);
  return v;
}

std::vector<double> PosteriorDraws::K_series(std::size_t t) const {
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& d : draws) v.push_back(static_cast<double>(d.slices.at(t).K));
  return v;
}

namespace {

std::filesystem::path dump_state(const AugmentedState& state, const ChainConfig& cfg,
                                 std::size_t iteration) {
  std::error_code ec;
  auto dir = cfg.dump_dir.empty() ? std::filesystem::temp_directory_path(ec) : cfg.dump_dir;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / ("exgcp_state_seed" + std::to_string(cfg.seed) + "_iter" +
                           std::to_string(iteration) + ".csv");
  std::ofstream out(path);
  out << "t,x,y,z,observed,lambda_star\n" << std::setprecision(17);
  for (std::size_t t = 0; t < state.T(); ++t) {
    const auto& s = state.slices[t];
    for (std::size_t i = 0; i < s.K(); ++i)
      out << t + 1 << ',' << s.points[i].x << ',' << s.points[i].y << ',' << s.z[i] << ','
          << (i < s.n_observed ? 1 : 0) << ',' << s.lambda_star << '\n';
  }
  return path;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

PosteriorDraws run_chain(const EventSet& events, const ChainConfig& cfg, const Domain& d,
                         const ProgressFn& progress) {
  cfg.validate();
  events.validate_inside(d);
  if (events.total() == 0 && !cfg.allow_empty)
    throw ValidationError("event set is empty; set allow_empty to fit anyway");
  AugmentedState state = AugmentedState::initialize(events, cfg.stp, d, cfg.fixed_lambda_star);
  const SamplerSettings settings = cfg.settings();
  const std::size_t T = events.T();

  PosteriorDraws out;
  out.domain = d;
  out.stp = cfg.stp;
  out.M = cfg.M;
  out.draws.reserve(cfg.n_iter - cfg.burn_in);
  out.stats.thinning_proposals.assign(T, 0);
  out.stats.thinning_accepted.assign(T, 0);

  using Clock = std::chrono::steady_clock;
  for (std::size_t it = 0; it < cfg.n_iter; ++it) {
    auto start = Clock::now();
    try {
      const auto th = sample_thinned(state, d, settings, cfg.seed, it);
      for (std::size_t t = 0; t < T; ++t) {
        out.stats.thinning_proposals[t] += th[t].proposals;
        out.stats.thinning_accepted[t] += th[t].accepted;
      }
    } catch (const RunawayThinningError& e) {
      throw RunawayThinningError("iteration " + std::to_string(it) + ": " + e.what(), e.slice(),
                                 e.acceptance_rate());
    } catch (const NumericalError& e) {
      const auto path = dump_state(state, cfg, it);
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what() +
                           " (state dumped to " + path.string() + ")");
    }
    out.stats.seconds.thinned += seconds_since(start);

    start = Clock::now();
    try {
      sample_latent(state, settings, cfg.seed, it);
    } catch (const NumericalError& e) {
      const auto path = dump_state(state, cfg, it);
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what() +
                           " (state dumped to " + path.string() + ")");
    }
    out.stats.seconds.latent += seconds_since(start);

    start = Clock::now();
    if (!cfg.fixed_lambda_star) {
      Rng rng = Rng::substream(cfg.seed, {kLambdaStream, it});
      const auto k = state.K();
      const auto lambda = sample_lambda_star(k, d, cfg.prior, rng);
      for (std::size_t t = 0; t < T; ++t) state.slices[t].lambda_star = lambda[t];
    }
    out.stats.seconds.lambda_star += seconds_since(start);

    if (cfg.sample_theta) {
      start = Clock::now();
      Rng rng = Rng::substream(cfg.seed, {kThetaStream, it});
      const auto st = sample_theta_mh(state, settings, cfg.theta_proposal_sd, rng);
      out.stats.theta.proposed += st.proposed;
      out.stats.theta.accepted += st.accepted;
      out.stats.seconds.theta += seconds_since(start);
    }

    if (it >= cfg.burn_in) {
      Draw draw;
      draw.theta = state.stp;
      draw.slices.resize(T);
      for (std::size_t t = 0; t < T; ++t) {
        const auto& s = state.slices[t];
        auto& sd = draw.slices[t];
        sd.lambda_star = s.lambda_star;
        sd.K = s.K();
        sd.n_observed = s.n_observed;
        const std::size_t keep = cfg.store_thinned ? s.K() : s.n_observed;
        sd.points.assign(s.points.begin(), s.points.begin() + static_cast<std::ptrdiff_t>(keep));
        sd.z.assign(s.z.begin(), s.z.begin() + static_cast<std::ptrdiff_t>(keep));
      }
      out.draws.push_back(std::move(draw));
    }
    if (progress) progress(it);
  }
  return out;
}

}  // namespace exgcp
