#include "exgcp/gp_core.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "exgcp/errors.hpp"

namespace exgcp {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_log_cdf(double x) {
  if (x > -5.0) return std::log(normal_cdf(x));
  // erfc loses nothing here, but its log does once the value underflows.
  const double c = normal_cdf(x);
  if (c > 0.0) return std::log(c);
  // Mills-ratio asymptotic series.
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile needs p in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_upper_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("normal_upper_quantile needs q in (0, 1)");
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

double normal_log_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

void CovParams::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw ValidationError("covariance variance sigma2 must be positive");
  if (!(phi > 0.0) || !std::isfinite(phi))
    throw ValidationError("covariance decay phi must be positive");
}

void SpaceTimeCovParams::validate() const {
  theta1.validate();
  theta.validate();
}

double exp_cov(const Point& s, const Point& s2, const CovParams& p) {
  return p.sigma2 * std::exp(-p.phi * distance(s, s2));
}

ExpKernel::ExpKernel(const CovParams& p) : terms_{p, p}, count_(1) { p.validate(); }

ExpKernel::ExpKernel(const CovParams& a, const CovParams& b) : terms_{a, b}, count_(2) {
  a.validate();
  b.validate();
}

ExpKernel ExpKernel::cumulative(const SpaceTimeCovParams& stp, std::size_t t) {
  if (t == 0) return ExpKernel(stp.theta1);
  return ExpKernel(stp.theta1,
                   CovParams{static_cast<double>(t) * stp.theta.sigma2, stp.theta.phi});
}

double ExpKernel::variance() const {
  return count_ == 1 ? terms_[0].sigma2 : terms_[0].sigma2 + terms_[1].sigma2;
}

Eigen::MatrixXd covariance_matrix(std::span<const Point> pts, const ExpKernel& k) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd c(n, n);
  const double diag = k.variance() + k.jitter();
  for (Eigen::Index j = 0; j < n; ++j) {
    c(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i) c(i, j) = c(j, i) = k(pts[i], pts[j]);
  }
  return c;
}

Eigen::MatrixXd cross_covariance(std::span<const Point> a, std::span<const Point> b,
                                 const ExpKernel& k) {
  Eigen::MatrixXd c(a.size(), b.size());
  for (std::size_t j = 0; j < b.size(); ++j)
    for (std::size_t i = 0; i < a.size(); ++i) c(i, j) = k(a[i], b[j]);
  return c;
}

Eigen::VectorXd cross_covariance(std::span<const Point> pts, const Point& target,
                                 const ExpKernel& k) {
  Eigen::VectorXd c(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) c[i] = k(pts[i], target);
  return c;
}

double clamp_variance(double v) {
  if (v >= 0.0) return v;
  if (v > -kVarianceTolerance) return 0.0;
  throw NumericalError("negative conditional variance " + std::to_string(v));
}

DenseGP::DenseGP(std::vector<Point> locations, const ExpKernel& kernel)
    : DenseGP(std::move(locations), kernel, Eigen::VectorXd()) {}

DenseGP::DenseGP(std::vector<Point> locations, const ExpKernel& kernel, Eigen::VectorXd mean)
    : locations_(std::move(locations)), kernel_(kernel), mean_(std::move(mean)) {
  const auto n = static_cast<Eigen::Index>(locations_.size());
  if (mean_.size() == 0) mean_ = Eigen::VectorXd::Zero(n);
  if (mean_.size() != n) throw ValidationError("DenseGP mean length differs from locations");
  cov_ = covariance_matrix(locations_, kernel_);
  if (n > 0) {
    chol_.compute(cov_);
    if (chol_.info() != Eigen::Success)
      throw NumericalError("dense covariance is not positive definite");
  }
}

Moments DenseGP::conditional(const Eigen::VectorXd& values, const Point& target,
                             double target_mean) const {
  if (values.size() != static_cast<Eigen::Index>(size()))
    throw ValidationError("conditioning values must match the location count");
  const double prior_var = kernel_.variance() + kernel_.jitter();
  if (size() == 0) return {target_mean, prior_var};
  const Eigen::VectorXd c = cross_covariance(locations_, target, kernel_);
  const Eigen::VectorXd w = chol_.solve(c);
  return {target_mean + w.dot(values - mean_), clamp_variance(prior_var - w.dot(c))};
}

double DenseGP::log_density(const Eigen::VectorXd& values) const {
  if (size() == 0) return 0.0;
  return mvn_log_density(values, mean_, chol_);
}

Moments dense_conditional(const DenseGP& gp, const Eigen::VectorXd& values, const Point& target,
                          double target_mean) {
  return gp.conditional(values, target, target_mean);
}

Eigen::MatrixXd block_inverse_update(const Eigen::MatrixXd& cinv, const Eigen::VectorXd& c_new,
                                     double var_new) {
  constexpr double kMinVariance = 1e-12;
  const Eigen::Index k = cinv.rows();
  if (cinv.cols() != k || c_new.size() != k)
    throw ValidationError("block_inverse_update: dimension mismatch");
  if (!(var_new > kMinVariance))
    throw NumericalError("block_inverse_update: degenerate conditional variance " +
                         std::to_string(var_new));
  const Eigen::VectorXd b = cinv * c_new;
  const double inv = 1.0 / var_new;
  Eigen::MatrixXd out(k + 1, k + 1);
  out.topLeftCorner(k, k) = cinv;
  out.topLeftCorner(k, k).noalias() += inv * b * b.transpose();
  out.topRightCorner(k, 1) = -inv * b;
  out.bottomLeftCorner(1, k) = -inv * b.transpose();
  out(k, k) = inv;
  return out;
}

DenseConditioner::DenseConditioner(const ExpKernel& kernel) : kernel_(kernel) {}

Moments DenseConditioner::moments(const Point& target, double target_mean) const {
  const double prior_var = kernel_.variance() + kernel_.jitter();
  if (points_.empty()) return {target_mean, prior_var};
  const Eigen::VectorXd c = cross_covariance(points_, target, kernel_);
  const Eigen::VectorXd w = cinv_ * c;
  return {target_mean + w.dot(resid_), clamp_variance(prior_var - w.dot(c))};
}

void DenseConditioner::add(const Point& p, double value, double prior_mean) {
  const double prior_var = kernel_.variance() + kernel_.jitter();
  if (points_.empty()) {
    cinv_ = Eigen::MatrixXd::Constant(1, 1, 1.0 / prior_var);
  } else {
    const Eigen::VectorXd c = cross_covariance(points_, p, kernel_);
    const double var = prior_var - c.dot(cinv_ * c);
    cinv_ = block_inverse_update(cinv_, c, var);
  }
  points_.push_back(p);
  resid_.conservativeResize(resid_.size() + 1);
  resid_[resid_.size() - 1] = value - prior_mean;
}

void DenseConditioner::remove_swap_last(std::size_t i) {
  const auto last = static_cast<Eigen::Index>(points_.size()) - 1;
  const auto k = static_cast<Eigen::Index>(i);
  if (k != last) {
    cinv_.row(k).swap(cinv_.row(last));
    cinv_.col(k).swap(cinv_.col(last));
    std::swap(resid_[k], resid_[last]);
    points_[i] = points_.back();
  }
  // Inverse of the leading block from the inverse of the full matrix.
  const Eigen::VectorXd p = cinv_.col(last).head(last);
  const double pll = cinv_(last, last);
  Eigen::MatrixXd next = cinv_.topLeftCorner(last, last);
  next.noalias() -= p * p.transpose() / pll;
  cinv_ = std::move(next);
  resid_.conservativeResize(last);
  points_.pop_back();
}

double mvn_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::LLT<Eigen::MatrixXd>& chol) {
  const Eigen::VectorXd r = chol.matrixL().solve(x - mean);
  const Eigen::MatrixXd& l = chol.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
  return -0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) - logdet -
         0.5 * r.squaredNorm();
}

}  // namespace exgcp
