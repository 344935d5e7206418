#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "exgcp/geometry.hpp"
#include "exgcp/normal.hpp"

namespace exgcp {

/// Relative diagonal jitter (times the marginal variance) added to every
/// covariance matrix before factorization.
inline constexpr double kJitterScale = 1e-10;
/// Conditional variances in (-kVarianceTolerance, 0) are clamped to 0.
inline constexpr double kVarianceTolerance = 1e-10;

/// Exponential covariance parameters: sigma2 * exp(-phi * distance).
struct CovParams {
  double sigma2 = 1.0;
  double phi = 1.0;

  void validate() const;
  friend bool operator==(const CovParams&, const CovParams&) = default;
};

/// theta1 drives the t = 1 innovation, theta every later one.
struct SpaceTimeCovParams {
  CovParams theta1;
  CovParams theta;

  void validate() const;
  /// Innovation parameters for 0-based slice t.
  const CovParams& innovation(std::size_t t) const { return t == 0 ? theta1 : theta; }
  friend bool operator==(const SpaceTimeCovParams&, const SpaceTimeCovParams&) = default;
};

double exp_cov(const Point& s, const Point& s2, const CovParams& p);

/// Sum of at most two exponential terms. A single term is the ordinary
/// exponential kernel; two terms give the marginal covariance of the
/// random-walk field, C_theta1 + (t - 1) C_theta.
class ExpKernel {
 public:
  ExpKernel(const CovParams& p);  // NOLINT(google-explicit-constructor)
  ExpKernel(const CovParams& a, const CovParams& b);

  /// Marginal covariance of z_t (0-based t) under the random walk.
  static ExpKernel cumulative(const SpaceTimeCovParams& stp, std::size_t t);

  double operator()(const Point& a, const Point& b) const {
    const double d = distance(a, b);
    double v = terms_[0].sigma2 * std::exp(-terms_[0].phi * d);
    if (count_ == 2) v += terms_[1].sigma2 * std::exp(-terms_[1].phi * d);
    return v;
  }
  double variance() const;
  double jitter() const { return kJitterScale * variance(); }

 private:
  std::array<CovParams, 2> terms_;
  std::size_t count_;
};

/// Dense covariance over `pts` with jitter on the diagonal.
Eigen::MatrixXd covariance_matrix(std::span<const Point> pts, const ExpKernel& k);
Eigen::MatrixXd cross_covariance(std::span<const Point> a, std::span<const Point> b,
                                 const ExpKernel& k);
Eigen::VectorXd cross_covariance(std::span<const Point> pts, const Point& target,
                                 const ExpKernel& k);

/// Clamp roundoff-negative variances to 0; throw NumericalError below tolerance.
double clamp_variance(double v);

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

/// Exact Gaussian process restricted to a finite location set.
class DenseGP {
 public:
  DenseGP(std::vector<Point> locations, const ExpKernel& kernel);
  DenseGP(std::vector<Point> locations, const ExpKernel& kernel, Eigen::VectorXd mean);

  std::size_t size() const { return locations_.size(); }
  const std::vector<Point>& locations() const { return locations_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const ExpKernel& kernel() const { return kernel_; }
  const Eigen::LLT<Eigen::MatrixXd>& chol() const { return chol_; }

  Moments conditional(const Eigen::VectorXd& values, const Point& target,
                      double target_mean = 0.0) const;
  double log_density(const Eigen::VectorXd& values) const;

 private:
  std::vector<Point> locations_;
  ExpKernel kernel_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

Moments dense_conditional(const DenseGP& gp, const Eigen::VectorXd& values, const Point& target,
                          double target_mean = 0.0);

/// Grow the inverse of a k x k covariance to (k+1) x (k+1) after appending a
/// point with cross-covariance `c_new` against the current set and conditional
/// variance `var_new`. O(k^2).
Eigen::MatrixXd block_inverse_update(const Eigen::MatrixXd& cinv, const Eigen::VectorXd& c_new,
                                     double var_new);

/// Sequential conditioning set used by the thinned-point sampler: answers
/// conditional-moment queries for new locations and absorbs accepted points.
class SequentialConditioner {
 public:
  virtual ~SequentialConditioner() = default;
  virtual std::size_t size() const = 0;
  /// Moments of z(target) given every absorbed value, with prior mean
  /// `target_mean` at the target.
  virtual Moments moments(const Point& target, double target_mean) const = 0;
  /// Absorb z(p) = value, where p has prior mean `prior_mean`.
  virtual void add(const Point& p, double value, double prior_mean) = 0;
  /// Forget absorbed point i; the last absorbed point takes index i.
  virtual void remove_swap_last(std::size_t i) = 0;
};

/// Exact conditioning on all absorbed points, keeping C^{-1} current with
/// block_inverse_update. O(k^2) per query and per insertion.
class DenseConditioner final : public SequentialConditioner {
 public:
  explicit DenseConditioner(const ExpKernel& kernel);

  std::size_t size() const override { return points_.size(); }
  Moments moments(const Point& target, double target_mean) const override;
  void add(const Point& p, double value, double prior_mean) override;
  void remove_swap_last(std::size_t i) override;
  const Eigen::MatrixXd& inverse() const { return cinv_; }

 private:
  ExpKernel kernel_;
  std::vector<Point> points_;
  Eigen::VectorXd resid_;  // value - prior mean
  Eigen::MatrixXd cinv_;
};

/// Multivariate normal log-density through a Cholesky factor.
double mvn_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::LLT<Eigen::MatrixXd>& chol);

}  // namespace exgcp
