#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/distributions/skew_normal.hpp>
#include <omp.h>

#include "exgcp/diagnostics.hpp"
#include "exgcp/draws_io.hpp"
#include "exgcp/errors.hpp"
#include "exgcp/mcmc.hpp"
#include "exgcp/normal.hpp"
#include "exgcp/simulator.hpp"
#include "oracles.hpp"

using namespace exgcp;
namespace fs = std::filesystem;

namespace {

const Domain kUnit(0, 1, 0, 1);

std::vector<Point> uniform_points(std::size_t n, const Domain& d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> p(n);
  for (auto& q : p) q = {rng.uniform(d.x_min(), d.x_max()), rng.uniform(d.y_min(), d.y_max())};
  return p;
}

// One slice with the given observed and thinned points, z = 0.
AugmentedState one_slice(std::vector<Point> obs, std::vector<Point> thin, CovParams theta,
                         double lambda) {
  AugmentedState st;
  st.stp = {theta, theta};
  SliceState s;
  s.n_observed = obs.size();
  s.points = std::move(obs);
  s.points.insert(s.points.end(), thin.begin(), thin.end());
  s.z.assign(s.points.size(), 0.0);
  s.lambda_star = lambda;
  st.slices.push_back(std::move(s));
  return st;
}

// Pearson chi-square p-value of observed counts against expected counts,
// pooling the upper tail into the last bin.
double chi_square_counts(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k)
    stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
  return oracle::chi_square_p(stat, double(observed.size() - 1));
}

EventSet small_events(std::size_t T, std::size_t per_slice, const Domain& d, std::uint64_t seed) {
  EventSet ev(T);
  for (std::size_t t = 0; t < T; ++t)
    for (const auto& p : uniform_points(per_slice + 3 * t, d, seed + t)) ev.add(t, p);
  return ev;
}

}  // namespace

TEST_CASE("truncated Poisson in the rejection and inversion regimes") {
  Rng rng(61);
  CHECK(truncated_poisson_at_least(0.0, 0, rng) == 0);
  CHECK_THROWS_AS(truncated_poisson_at_least(0.0, 3, rng), ValidationError);
  for (auto [mean, lower] : {std::pair{10.0, 5ull}, std::pair{2.0, 12ull}}) {
    const boost::math::poisson_distribution<double> pois(mean);
    const double tail = boost::math::cdf(boost::math::complement(pois, double(lower) - 1));
    const std::size_t bins = 6, reps = 20000;
    std::vector<double> obs(bins, 0.0), exp(bins, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
      const auto k = truncated_poisson_at_least(mean, lower, rng);
      REQUIRE(k >= lower);
      obs[std::min<std::size_t>(k - lower, bins - 1)] += 1;
    }
    double used = 0.0;
    for (std::size_t b = 0; b + 1 < bins; ++b) {
      exp[b] = reps * boost::math::pdf(pois, double(lower + b)) / tail;
      used += exp[b];
    }
    exp[bins - 1] = reps - used;
    CHECK(chi_square_counts(obs, exp) > 1e-3);
  }
}

TEST_CASE("fixed-count thinning with K = n leaves no thinned points") {
  auto st = one_slice(uniform_points(5, kUnit, 62), {}, {1.0, 2.0}, 1e-8);
  SamplerSettings s;
  s.thinning = ThinningScheme::kFixedCount;
  Rng rng(63);
  const auto stats = sample_thinned_slice(st, 0, kUnit, s, rng);
  CHECK(st.slices[0].K() == 5);
  CHECK(st.slices[0].m() == 0);
  CHECK(stats.proposals == 0);
}

TEST_CASE("a null latent field accepts half the proposals") {
  // sigma2 -> 0 pins z at 0, so each proposal is kept with probability 1/2.
  const Domain d(0, 10, 0, 10);
  SamplerSettings s;
  s.M = 5;
  for (auto scheme : {ThinningScheme::kFixedCount, ThinningScheme::kPoissonThinning}) {
    s.thinning = scheme;
    auto st = one_slice({}, {}, {1e-20, 2.0}, 100.0);
    Rng rng(64);
    const auto stats = sample_thinned_slice(st, 0, d, s, rng);
    REQUIRE(stats.accepted > 4000);
    const double ratio = double(stats.proposals) / double(stats.accepted);
    if (scheme == ThinningScheme::kFixedCount) {
      // Geometric(1/2) waiting times: mean 2, variance 2.
      CHECK(std::abs(ratio - 2.0) < 4.0 * std::sqrt(2.0 / double(stats.accepted)));
    } else {
      const double p = 1.0 / ratio;
      CHECK(std::abs(p - 0.5) < 4.0 * std::sqrt(0.25 / double(stats.proposals)));
    }
    CHECK(st.slices[0].m() == stats.accepted);
  }
}

TEST_CASE("thinned count law matches forward simulation") {
  // No observed points, lambda* = 5 on the unit square: each call is an
  // independent draw of the thinned pattern, to be compared with thinning a
  // fresh Poisson scatter under a jointly drawn latent field.
  const CovParams theta{1.0, 2.0};
  const std::size_t reps = 20000, bins = 8;
  std::vector<double> fwd(bins, 0.0);
  Rng frng(65);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto n = frng.poisson(5.0);
    std::vector<Point> p(n);
    for (auto& q : p) q = {frng.uniform(), frng.uniform()};
    std::size_t m = 0;
    if (n > 0) {
      const Eigen::MatrixXd L = oracle::cov(p, theta.sigma2, theta.phi).llt().matrixL();
      Eigen::VectorXd e(static_cast<Eigen::Index>(n));
      for (auto& x : e) x = frng.normal();
      const Eigen::VectorXd z = L * e;
      for (std::size_t i = 0; i < n; ++i) m += frng.uniform() < oracle::normal_cdf(-z[i]);
    }
    fwd[std::min(m, bins - 1)] += 1;
  }
  for (auto mode : {GpMode::kNngp, GpMode::kDense}) {
    SamplerSettings s;
    s.mode = mode;
    s.thinning = ThinningScheme::kPoissonThinning;
    std::vector<double> smp(bins, 0.0);
    Rng rng(66);
    for (std::size_t r = 0; r < reps; ++r) {
      auto st = one_slice({}, {}, theta, 5.0);
      sample_thinned_slice(st, 0, kUnit, s, rng);
      smp[std::min(st.slices[0].m(), bins - 1)] += 1;
    }
    // Two-sample chi-square on the histograms.
    double stat = 0.0;
    for (std::size_t b = 0; b < bins; ++b)
      if (fwd[b] + smp[b] > 0) stat += (fwd[b] - smp[b]) * (fwd[b] - smp[b]) / (fwd[b] + smp[b]);
    CHECK(oracle::chi_square_p(stat, double(bins - 1)) > 1e-3);
  }
}

TEST_CASE("birth-death thinning under a null latent field") {
  // z == 0 makes the thinned count's stationary law Poisson(lambda* |D| / 2).
  auto st = one_slice({}, {}, {1e-20, 2.0}, 40.0);
  SamplerSettings s;
  s.M = 5;
  Rng rng(67);
  std::vector<double> m;
  for (int it = 0; it < 6000; ++it) {
    const auto stats = sample_thinned_slice(st, 0, kUnit, s, rng);
    CHECK(stats.proposals == 40);
    if (it >= 200) m.push_back(double(st.slices[0].m()));
  }
  const double se = std::sqrt(20.0 * inefficiency_factor(m) / double(m.size()));
  CHECK(std::abs(oracle::mean(m) - 20.0) < 4.0 * se);
  CHECK(std::abs(oracle::var(m) / 20.0 - 1.0) < 0.15);
  CHECK(std::all_of(st.slices[0].points.begin(), st.slices[0].points.end(),
                    [](const Point& p) { return kUnit.contains(p); }));
}

TEST_CASE("birth-death thinning in the constant-field limit matches quadrature") {
  // phi -> 0 makes z one scalar c ~ N(0, 1). Given two observed points and
  // lambda* = 10 on the unit square, p(c | data) ~ phi(c) Phi(c)^2
  // exp(-10 Phi(c)) and E[m] = E[10 Phi(-c)].
  double norm = 0.0, em = 0.0, ec = 0.0;
  for (double c = -10.0; c <= 10.0; c += 1e-4) {
    const double w = std::exp(-0.5 * c * c + 2.0 * normal_log_cdf(c) - 10.0 * normal_cdf(c));
    norm += w;
    em += w * 10.0 * normal_cdf(-c);
    ec += w * c;
  }
  em /= norm;
  ec /= norm;

  auto st = one_slice({{0.2, 0.3}, {0.7, 0.6}}, {}, {1.0, 1e-3}, 10.0);
  SamplerSettings s;
  s.mode = GpMode::kDense;
  std::vector<double> m, z;
  for (std::uint64_t it = 0; it < 40000; ++it) {
    sample_thinned(st, kUnit, s, 68, it);
    sample_latent(st, s, 68, it);
    if (it >= 500) {
      m.push_back(double(st.slices[0].m()));
      z.push_back(st.slices[0].z[0]);
    }
  }
  auto se = [](const std::vector<double>& x) {
    return std::sqrt(oracle::var(x) * inefficiency_factor(x) / double(x.size()));
  };
  CHECK(std::abs(oracle::mean(m) - em) < 4.0 * se(m));
  CHECK(std::abs(oracle::mean(z) - ec) < 4.0 * se(z));
}

TEST_CASE("lambda* posterior is calibrated under prior replication") {
  // Draw lambda* from its prior, simulate, fit: the posterior rank of the true
  // value is then uniform, so its average over replications is 1/2.
  const Domain d(0, 2, 0, 2);
  const int reps = 40;
  double rank_sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    Rng rng(900 + r);
    const double lambda = rng.gamma(4.0, 0.2);
    const auto sim = simulate_exgcp_spatial(lambda, {1.0, 2.0}, d, rng);
    ChainConfig cfg;
    cfg.n_iter = 600;
    cfg.burn_in = 100;
    cfg.stp = {{1.0, 2.0}, {1.0, 2.0}};
    cfg.prior = {8.0, 0.4, 0.5};  // G(4, 0.2) after discounting
    cfg.mode = GpMode::kDense;
    cfg.seed = 31 + r;
    cfg.allow_empty = true;
    const auto l = run_chain(sim.events, cfg, d).lambda_series(0);
    rank_sum += double(std::count_if(l.begin(), l.end(), [&](double x) { return x < lambda; })) /
                double(l.size());
  }
  CHECK(std::abs(rank_sum / reps - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / reps));
}

TEST_CASE("runaway thinning is reported with its slice") {
  SamplerSettings s;
  s.max_proposals_per_thinned_point = 10;
  Rng rng(67);
  for (auto scheme : {ThinningScheme::kBirthDeath, ThinningScheme::kPoissonThinning}) {
    s.thinning = scheme;
    auto st = one_slice({}, {}, {1.0, 2.0}, 100.0);
    try {
      sample_thinned_slice(st, 0, kUnit, s, rng);
      FAIL("expected runaway thinning");
    } catch (const RunawayThinningError& e) {
      CHECK(e.slice() == 0);
    }
  }

  // Latent field pinned near +8: acceptance probability about 6e-16.
  auto hot = one_slice(uniform_points(3, kUnit, 68), {}, {1e-6, 0.01}, 50.0);
  hot.slices[0].z.assign(3, 8.0);
  s.thinning = ThinningScheme::kFixedCount;
  s.max_proposals_per_thinned_point = 1000;
  try {
    sample_thinned_slice(hot, 0, kUnit, s, rng);
    FAIL("expected runaway thinning");
  } catch (const RunawayThinningError& e) {
    CHECK(e.slice() == 0);
    CHECK(e.acceptance_rate() == 0.0);
    CHECK(std::string(e.what()).find("t=1") != std::string::npos);
  }
}

TEST_CASE("single-point latent draws follow the skew-normal law") {
  // One observed point: z ~ N(0, s2) Phi(z), a skew normal with scale and
  // shape sqrt(s2). A thinned point flips the shape.
  const double s2 = 2.0, w = std::sqrt(s2);
  for (auto scheme : {LatentScheme::kGibbsAugmented, LatentScheme::kSequentialNngp})
    for (bool observed : {true, false}) {
      const Point p{0.5, 0.5};
      auto st = observed ? one_slice({p}, {}, {s2, 1.0}, 1.0) : one_slice({}, {p}, {s2, 1.0}, 1.0);
      SamplerSettings s;
      s.latent = scheme;
      Rng rng(69);
      std::vector<double> z;
      for (int it = 0; it < 100000; ++it) {
        sample_latent_slice(st, 0, s, rng);
        if (it % 10 == 9) z.push_back(st.slices[0].z[0]);
      }
      const boost::math::skew_normal_distribution<double> sn(0.0, w, observed ? w : -w);
      CHECK(oracle::ks_one_sample(z, [&](double x) { return boost::math::cdf(sn, x); }) > 1e-3);
    }
}

TEST_CASE("all-thinned slice pulls the latent field negative") {
  const auto pts = uniform_points(5, kUnit, 70);
  auto neg = one_slice({}, pts, {1.0, 2.0}, 1.0);
  auto pos = one_slice(pts, {}, {1.0, 2.0}, 1.0);
  SamplerSettings s;
  Rng rng(71);
  double sn = 0.0, sp = 0.0;
  const int iters = 5000;
  for (int it = 0; it < iters; ++it) {
    sample_latent_slice(neg, 0, s, rng);
    sample_latent_slice(pos, 0, s, rng);
    for (int i = 0; i < 5; ++i) sn += neg.slices[0].z[i], sp += pos.slices[0].z[i];
  }
  CHECK(sn / (5.0 * iters) < -0.2);
  CHECK(sp / (5.0 * iters) > 0.2);
}

TEST_CASE("latent conditional mean agrees between dense and saturated NNGP") {
  const auto obs = uniform_points(10, kUnit, 72), thin = uniform_points(6, kUnit, 73);
  AugmentedState st;
  st.stp = {{1.0, 2.0}, {0.3, 3.0}};
  for (int t = 0; t < 2; ++t) {
    SliceState s;
    s.n_observed = obs.size();
    s.points = obs;
    s.points.insert(s.points.end(), thin.begin(), thin.end());
    Rng rng(74 + t);
    for (std::size_t i = 0; i < s.points.size(); ++i) s.z.push_back(rng.normal());
    st.slices.push_back(s);
  }
  Rng rng(76);
  Eigen::VectorXd v0(16);
  for (auto& x : v0) x = std::abs(rng.normal());
  SamplerSettings dense, nngp;
  dense.mode = GpMode::kDense;
  nngp.M = 15;
  for (std::size_t t = 0; t < 2; ++t) {
    const auto a = latent_conditional_mean(st, t, dense, v0);
    const auto b = latent_conditional_mean(st, t, nngp, v0);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK_THROWS_AS(latent_conditional_mean(st, 0, dense, Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST_CASE("prior mean field krigs the previous slice") {
  const auto prev = uniform_points(12, kUnit, 77);
  AugmentedState st;
  st.stp = {{1.0, 2.0}, {0.3, 3.0}};
  st.slices.resize(3);
  st.slices[0].points = prev;
  st.slices[0].n_observed = prev.size();
  Rng rng(78);
  Eigen::VectorXd v(12);
  for (auto& x : v) x = rng.normal();
  st.slices[0].z.assign(v.data(), v.data() + 12);
  st.slices[1].points = uniform_points(4, kUnit, 79);
  st.slices[1].z = {0.5, -0.5, 1.0, 0.0};
  st.slices[1].n_observed = 4;

  SamplerSettings dense, nngp;
  dense.mode = GpMode::kDense;
  nngp.M = 30;
  const Point target{0.33, 0.71};
  CHECK(PriorMeanField(st, 0, dense).at(target) == 0.0);
  const double o = oracle::krige(prev, v, target, 1.0, 2.0).mean;
  CHECK(PriorMeanField(st, 1, dense).at(target) == doctest::Approx(o).epsilon(1e-10));
  CHECK(PriorMeanField(st, 1, nngp).at(target) == doctest::Approx(o).epsilon(1e-10));
  // Slice 2 krigs slice 1 with the two-term marginal kernel.
  Eigen::VectorXd v1(4);
  v1 << 0.5, -0.5, 1.0, 0.0;
  const auto k = ExpKernel::cumulative(st.stp, 1);
  const Eigen::VectorXd c = cross_covariance(st.slices[1].points, target, k);
  const double expect = c.dot(covariance_matrix(st.slices[1].points, k).ldlt().solve(v1));
  CHECK(PriorMeanField(st, 2, dense).at(target) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("lambda* forward filtering and backward sampling") {
  const Domain d(0, 10, 0, 10);
  Rng rng(80);
  const std::size_t K1[1] = {950};
  std::vector<double> a, b;
  for (int r = 0; r < 20000; ++r) {
    a.push_back(sample_lambda_star(K1, d, {100.0, 10.0, 0.5}, rng)[0]);
    b.push_back(sample_lambda_star(K1, d, {100.0, 10.0, 0.0}, rng)[0]);
  }
  CHECK(std::abs(oracle::mean(a) - 1000.0 / 105.0) < 4.0 * std::sqrt(1000.0 / (105.0 * 105.0) / 20000));
  CHECK(std::abs(oracle::mean(b) - 9.5) < 4.0 * std::sqrt(0.095 / 20000));
  CHECK(oracle::var(b) == doctest::Approx(0.095).epsilon(0.05));

  const std::size_t K4[4] = {100, 3000, 6000, 2000};
  for (int r = 0; r < 1000; ++r) {
    const auto l = sample_lambda_star(K4, d, {100.0, 10.0, 0.5}, rng);
    for (std::size_t t = 0; t < 4; ++t) REQUIRE(l[t] > 0.0);
    for (std::size_t t = 0; t + 1 < 4; ++t) REQUIRE(l[t] > 0.5 * l[t + 1]);
  }

  const std::size_t K0[2] = {0, 4};
  CHECK_THROWS_AS(sample_lambda_star(K0, d, {100.0, 10.0, 0.0}, rng), ValidationError);
  CHECK_NOTHROW(sample_lambda_star(K0, d, {100.0, 10.0, 0.5}, rng));
  CHECK_THROWS_AS(sample_lambda_star(K1, d, {100.0, 10.0, 1.0}, rng), ValidationError);
}

TEST_CASE("theta Metropolis step") {
  auto st = one_slice(uniform_points(30, kUnit, 81), uniform_points(10, kUnit, 82), {1.0, 2.0}, 1.0);
  Rng zr(83);
  for (auto& z : st.slices[0].z) z = zr.normal();
  SamplerSettings s;

  SUBCASE("tiny proposals are nearly always accepted") {
    Rng rng(84);
    ThetaStats total;
    for (int i = 0; i < 1000; ++i) {
      const auto r = sample_theta_mh(st, s, 1e-9, rng);
      total.proposed += r.proposed;
      total.accepted += r.accepted;
    }
    CHECK(total.proposed == 1000);
    CHECK(double(total.accepted) / 1000.0 > 0.99);
  }

  SUBCASE("two-point proposal accepts at the likelihood ratio") {
    const CovParams ta{1.0, 2.0}, tb{1.3, 2.6};
    const double la = theta_log_likelihood(st, ThetaGroup::kFirst, ta, s);
    const double lb = theta_log_likelihood(st, ThetaGroup::kFirst, tb, s);
    const auto swap = [&](const CovParams& c, Rng&) { return c == ta ? tb : ta; };
    Rng rng(85);
    std::size_t from_a = 0, acc_a = 0, from_b = 0, acc_b = 0;
    for (int i = 0; i < 6000; ++i) {
      const bool at_a = st.stp.theta1 == ta;
      const auto r = sample_theta_mh(st, s, 0.1, rng, {}, swap);
      (at_a ? from_a : from_b) += 1;
      (at_a ? acc_a : acc_b) += r.accepted;
    }
    const double pa = std::min(1.0, std::exp(lb - la)), pb = std::min(1.0, std::exp(la - lb));
    CHECK(std::abs(double(acc_a) / from_a - pa) <= 4.0 * std::sqrt(pa * (1 - pa) / from_a) + 1e-12);
    CHECK(std::abs(double(acc_b) / from_b - pb) <= 4.0 * std::sqrt(pb * (1 - pb) / from_b) + 1e-12);
  }

  SUBCASE("log-likelihood matches a dense evaluation when saturated") {
    SamplerSettings sat;
    sat.M = 39;
    SamplerSettings dense;
    dense.mode = GpMode::kDense;
    const CovParams c{0.8, 1.7};
    CHECK(theta_log_likelihood(st, ThetaGroup::kFirst, c, sat) ==
          doctest::Approx(theta_log_likelihood(st, ThetaGroup::kFirst, c, dense)).epsilon(1e-9));
  }
}

TEST_CASE("run_chain bookkeeping") {
  const Domain d(0, 3, 0, 3);
  const auto ev = small_events(2, 20, d, 90);
  ChainConfig cfg;
  cfg.n_iter = 21;
  cfg.burn_in = 20;
  cfg.M = 10;
  cfg.seed = 5;

  SUBCASE("one draw past burn-in") {
    const auto out = run_chain(ev, cfg, d);
    REQUIRE(out.draws.size() == 1);
    CHECK(out.T() == 2);
    for (std::size_t t = 0; t < 2; ++t) {
      const auto& s = out.draws[0].slices[t];
      CHECK(s.n_observed == ev.n(t));
      CHECK(s.K == s.points.size());
      CHECK(s.z.size() == s.points.size());
      CHECK(s.lambda_star > 0.0);
    }
    CHECK(out.draws[0].theta == cfg.stp);
  }

  SUBCASE("seeded runs repeat exactly, at any thread count") {
    cfg.n_iter = 40;
    cfg.burn_in = 10;
    cfg.sample_theta = true;
    omp_set_num_threads(1);
    const auto a = run_chain(ev, cfg, d);
    omp_set_num_threads(4);
    const auto b = run_chain(ev, cfg, d);
    omp_set_num_threads(1);
    std::ostringstream sa, sb;
    write_draws(sa, a, DrawsFormat::kBinary);
    write_draws(sb, b, DrawsFormat::kBinary);
    CHECK(sa.str() == sb.str());
    cfg.seed = 6;
    std::ostringstream sc;
    write_draws(sc, run_chain(ev, cfg, d), DrawsFormat::kBinary);
    CHECK(sa.str() != sc.str());
  }

  SUBCASE("observed-only storage and fixed lambda*") {
    cfg.store_thinned = false;
    cfg.fixed_lambda_star = std::vector<double>{4.0, 5.0};
    const auto out = run_chain(ev, cfg, d);
    const auto& s = out.draws[0].slices[1];
    CHECK(s.points.size() == s.n_observed);
    CHECK(s.K >= s.n_observed);
    CHECK(s.lambda_star == 5.0);
  }

  SUBCASE("invalid configurations") {
    cfg.n_iter = 20;
    CHECK_THROWS_AS(run_chain(ev, cfg, d), ValidationError);
    cfg.n_iter = 21;
    cfg.M = 0;
    CHECK_THROWS_AS(run_chain(ev, cfg, d), ValidationError);
    cfg.M = 10;
    cfg.fixed_lambda_star = std::vector<double>{1.0};
    CHECK_THROWS_AS(run_chain(ev, cfg, d), ValidationError);
    cfg.fixed_lambda_star.reset();
    CHECK_THROWS_AS(run_chain(ev, cfg, Domain(0, 1, 0, 1)), ValidationError);
    const EventSet empty(2);
    CHECK_THROWS_AS(run_chain(empty, cfg, d), ValidationError);
    cfg.allow_empty = true;
    // With w = 0 and no points at all, K_t = 0 leaves lambda*_t improper.
    CHECK_THROWS_AS(run_chain(empty, cfg, d), ValidationError);
    cfg.prior.w = 0.5;
    CHECK(run_chain(empty, cfg, d).draws.size() == 1);
  }

  SUBCASE("runaway thinning carries the iteration") {
    cfg.thinning = ThinningScheme::kFixedCount;
    cfg.max_proposals_per_thinned_point = 1;
    cfg.fixed_lambda_star = std::vector<double>{30.0, 30.0};
    try {
      run_chain(ev, cfg, d);
      FAIL("expected runaway thinning");
    } catch (const RunawayThinningError& e) {
      CHECK(std::string(e.what()).rfind("iteration 0", 0) == 0);
    }
  }

  SUBCASE("numerical failure dumps the state") {
    const fs::path dir = fs::temp_directory_path() / "exgcp_test_dump";
    fs::remove_all(dir);
    cfg.dump_dir = dir;
    cfg.stp.theta1 = {1e300, 1.0};
    try {
      run_chain(ev, cfg, d);
      FAIL("expected a numerical failure");
    } catch (const NumericalError& e) {
      const std::string msg = e.what();
      const auto at = msg.find("state dumped to ");
      REQUIRE(at != std::string::npos);
      const std::string path = msg.substr(at + 16, msg.size() - at - 17);
      CHECK(fs::exists(path));
    }
    fs::remove_all(dir);
  }
}

TEST_CASE("draws files round trip in both formats") {
  const Domain d(0, 3, 0, 3);
  ChainConfig cfg;
  cfg.n_iter = 8;
  cfg.burn_in = 3;
  cfg.M = 5;
  const auto out = run_chain(small_events(2, 10, d, 95), cfg, d);
  for (auto fmt : {DrawsFormat::kBinary, DrawsFormat::kCsv}) {
    std::stringstream buf;
    write_draws(buf, out, fmt);
    const auto back = read_draws(buf);
    CHECK(back.domain == out.domain);
    CHECK(back.stp == out.stp);
    CHECK(back.M == out.M);
    REQUIRE(back.draws.size() == out.draws.size());
    for (std::size_t k = 0; k < out.draws.size(); ++k)
      for (std::size_t t = 0; t < 2; ++t) {
        const auto& a = out.draws[k].slices[t];
        const auto& b = back.draws[k].slices[t];
        CHECK(a.lambda_star == b.lambda_star);
        CHECK(a.K == b.K);
        CHECK(a.n_observed == b.n_observed);
        CHECK(a.points == b.points);
        CHECK(a.z == b.z);
      }
  }
  std::stringstream junk("not a draws file");
  CHECK_THROWS_AS(read_draws(junk), ValidationError);
}
