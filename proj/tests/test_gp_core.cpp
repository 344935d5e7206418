#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "exgcp/errors.hpp"
#include "exgcp/gp_core.hpp"
#include "exgcp/random.hpp"
#include "oracles.hpp"

using namespace exgcp;

namespace {

std::vector<Point> uniform_points(std::size_t n, double side, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> p(n);
  for (auto& q : p) q = {rng.uniform(0, side), rng.uniform(0, side)};
  return p;
}

}  // namespace

TEST_CASE("exponential covariance values") {
  CHECK(exp_cov({1, 1}, {1, 1}, {1.0, 2.0}) == 1.0);
  CHECK(exp_cov({0, 0}, {0.3, 0.4}, {1.0, 2.0}) == doctest::Approx(0.3678794).epsilon(1e-7));
  CHECK(exp_cov({0, 0}, {0, 1}, {0.3, 3.0}) == doctest::Approx(0.0149361).epsilon(1e-6));
  CHECK_THROWS_AS(CovParams({0.0, 1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(CovParams({1.0, -1.0}).validate(), ValidationError);
}

TEST_CASE("cumulative kernel adds the random-walk increments") {
  const SpaceTimeCovParams stp{{1.0, 2.0}, {0.3, 3.0}};
  const Point a{0, 0}, b{0.7, 0.1};
  const double d = distance(a, b);
  CHECK(ExpKernel::cumulative(stp, 0)(a, b) == doctest::Approx(std::exp(-2 * d)));
  CHECK(ExpKernel::cumulative(stp, 3)(a, b) ==
        doctest::Approx(std::exp(-2 * d) + 3 * 0.3 * std::exp(-3 * d)));
  CHECK(ExpKernel::cumulative(stp, 3).variance() == doctest::Approx(1.9));
}

TEST_CASE("dense conditional: interpolation, empty set, hand 2x2") {
  const CovParams p{1.0, 2.0};
  const std::vector<Point> locs{{0, 0}, {3, 0}};
  Eigen::VectorXd v(2);
  v << 1.0, -1.0;
  const DenseGP gp(locs, p);

  const auto at = dense_conditional(gp, v, {3, 0});
  CHECK(at.mean == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(at.var < 1e-8);

  const DenseGP empty(std::vector<Point>{}, p);
  const auto prior = dense_conditional(empty, Eigen::VectorXd(0), {1, 1}, 0.25);
  CHECK(prior.mean == 0.25);
  CHECK(prior.var == doctest::Approx(1.0));

  // Target at distance 1 from the first point and 2 from the second.
  const double a = 1.0 + 1e-10, b = std::exp(-6.0);
  const double k1 = std::exp(-2.0), k2 = std::exp(-4.0);
  const double det = a * a - b * b;
  const double w1 = (a * k1 - b * k2) / det, w2 = (a * k2 - b * k1) / det;
  const auto m = dense_conditional(gp, v, {1, 0});
  CHECK(m.mean == doctest::Approx(w1 - w2).epsilon(1e-12));
  CHECK(m.var == doctest::Approx(1.0 + 1e-10 - (w1 * k1 + w2 * k2)).epsilon(1e-12));
}

TEST_CASE("dense log-density matches an independent evaluation") {
  const auto pts = uniform_points(15, 3.0, 21);
  Rng rng(22);
  Eigen::VectorXd x(15), mu(15);
  for (int i = 0; i < 15; ++i) x[i] = rng.normal(), mu[i] = rng.normal(0, 0.3);
  const DenseGP gp(pts, CovParams{0.8, 1.5}, mu);
  CHECK(gp.log_density(x) ==
        doctest::Approx(oracle::log_density(x, mu, oracle::cov(pts, 0.8, 1.5))).epsilon(1e-10));
}

TEST_CASE("block inverse update: 1x1 to 2x2") {
  const ExpKernel k(CovParams{1.5, 2.0});
  const Point a{0, 0}, b{0.4, 0.3};
  Eigen::MatrixXd c(2, 2);
  c << k(a, a) + k.jitter(), k(a, b), k(a, b), k(b, b) + k.jitter();
  Eigen::MatrixXd cinv(1, 1);
  cinv(0, 0) = 1.0 / c(0, 0);
  Eigen::VectorXd cn(1);
  cn[0] = c(0, 1);
  const double var_new = c(1, 1) - c(0, 1) * c(0, 1) / c(0, 0);
  const auto up = block_inverse_update(cinv, cn, var_new);
  CHECK(oracle::rel_frobenius(up, c.inverse()) < 1e-12);
}

TEST_CASE("block inverse update: independent point") {
  Eigen::MatrixXd cinv(2, 2);
  cinv << 2.0, -0.5, -0.5, 1.0;
  const auto up = block_inverse_update(cinv, Eigen::VectorXd::Zero(2), 4.0);
  CHECK(up.topLeftCorner(2, 2) == cinv);
  CHECK(up(2, 2) == 0.25);
  CHECK(up.row(2).head(2).isZero());
  CHECK_THROWS_AS(block_inverse_update(cinv, Eigen::VectorXd::Zero(2), 1e-13), NumericalError);
}

TEST_CASE("block inverse update: grow 5 to 25 points") {
  const auto pts = uniform_points(25, 3.0, 23);
  const ExpKernel k(CovParams{1.0, 2.0});
  const Eigen::MatrixXd full = covariance_matrix(pts, k);
  Eigen::MatrixXd cinv = full.topLeftCorner(5, 5).inverse();
  for (Eigen::Index n = 5; n < 25; ++n) {
    const Eigen::VectorXd c = full.col(n).head(n);
    const double var_new = full(n, n) - c.dot(cinv * c);
    cinv = block_inverse_update(cinv, c, var_new);
  }
  CHECK(oracle::rel_frobenius(cinv, full.inverse()) < 1e-8);
}

TEST_CASE("dense conditioner matches batch kriging") {
  const auto pts = uniform_points(30, 4.0, 24);
  const ExpKernel k(CovParams{1.0, 1.0});
  Rng rng(25);
  DenseConditioner dc(k);
  Eigen::VectorXd v(30);
  for (int i = 0; i < 30; ++i) {
    v[i] = rng.normal();
    dc.add(pts[i], v[i], 0.0);
  }
  const Point target{1.3, 2.2};
  const auto m = dc.moments(target, 0.0);
  const auto o = oracle::krige(pts, v, target, 1.0, 1.0);
  CHECK(m.mean == doctest::Approx(o.mean).epsilon(1e-9));
  CHECK(m.var == doctest::Approx(o.var).epsilon(1e-8));
}

TEST_CASE("dense conditioner removal matches a rebuilt conditioner") {
  auto pts = uniform_points(25, 4.0, 27);
  const ExpKernel k(CovParams{1.0, 1.0});
  Rng rng(28);
  std::vector<double> v(25);
  DenseConditioner dc(k);
  for (int i = 0; i < 25; ++i) {
    v[i] = rng.normal();
    dc.add(pts[i], v[i], 0.5);
  }
  for (std::size_t j : {3u, 23u, 0u, 10u}) {
    dc.remove_swap_last(j);
    pts[j] = pts.back();
    v[j] = v.back();
    pts.pop_back();
    v.pop_back();
  }
  DenseConditioner fresh(k);
  for (std::size_t i = 0; i < pts.size(); ++i) fresh.add(pts[i], v[i], 0.5);
  CHECK(dc.size() == 21);
  CHECK(oracle::rel_frobenius(dc.inverse(), fresh.inverse()) < 1e-9);
  const Point target{2.1, 0.4};
  CHECK(dc.moments(target, 0.5).mean == doctest::Approx(fresh.moments(target, 0.5).mean).epsilon(1e-9));
  CHECK(dc.moments(target, 0.5).var == doctest::Approx(fresh.moments(target, 0.5).var).epsilon(1e-9));

  DenseConditioner one(k);
  one.add({1, 1}, 2.0, 0.0);
  one.remove_swap_last(0);
  CHECK(one.size() == 0);
  CHECK(one.moments({1, 1}, 0.0).mean == 0.0);
}

TEST_CASE("covariance over 200 points is positive semidefinite") {
  const auto pts = uniform_points(200, 10.0, 26);
  const Eigen::MatrixXd c = covariance_matrix(pts, ExpKernel(CovParams{1.0, 2.0}));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  CHECK(es.eigenvalues().minCoeff() > -1e-9);
}

TEST_CASE("conditional variance is monotone in the conditioning set") {
  const auto pts = uniform_points(40, 3.0, 27);
  const ExpKernel k(CovParams{1.0, 2.0});
  const Point target{1.5, 1.5};
  DenseConditioner dc(k);
  double prev = dc.moments(target, 0.0).var;
  for (const auto& p : pts) {
    dc.add(p, 0.0, 0.0);
    const double v = dc.moments(target, 0.0).var;
    CHECK(v <= prev + 1e-12);
    CHECK(v >= 0.0);
    prev = v;
  }
}

TEST_CASE("variance clamping") {
  CHECK(clamp_variance(0.5) == 0.5);
  CHECK(clamp_variance(-1e-12) == 0.0);
  CHECK_THROWS_AS(clamp_variance(-1e-6), NumericalError);
}
