#include "exgcp/nngp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace exgcp {

NeighborGraph build_neighbor_graph(std::span<const Point> points, std::size_t M,
                                   NeighborSearch search) {
  if (M < 1) throw ValidationError("neighbor budget M must be at least 1");
  const std::size_t n = points.size();
  NeighborGraph g;
  g.M = M;
  g.order.resize(n);
  std::iota(g.order.begin(), g.order.end(), std::size_t{0});
  g.neighbors.resize(n);
  if (search == NeighborSearch::kExhaustive) {
    for (std::size_t i = 1; i < n; ++i) {
      g.neighbors[i] = nearest_exhaustive(points, points[i], M, i);
      std::sort(g.neighbors[i].begin(), g.neighbors[i].end());
    }
    return g;
  }
  SpatialIndex index(SpatialIndex::bounding_box(points), n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      index.nearest(points[i], M, g.neighbors[i]);
      std::sort(g.neighbors[i].begin(), g.neighbors[i].end());
    }
    index.insert(points[i]);
  }
  return g;
}

std::vector<std::size_t> lexicographic_order(std::span<const Point> points) {
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].x != points[b].x) return points[a].x < points[b].x;
    return points[a].y < points[b].y;
  });
  return idx;
}

Eigen::MatrixXd SparseFactor::dense_a() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t k = 0; k < neighbors[i].size(); ++k) a(i, neighbors[i][k]) = coef[i][k];
  return a;
}

SparseFactor nngp_factor(const NeighborGraph& graph, std::span<const Point> points,
                         const ExpKernel& kernel) {
  if (points.size() != graph.size())
    throw ValidationError("nngp_factor: graph and point list differ in size");
  const double diag = kernel.variance() + kernel.jitter();
  return nngp_factor_from(graph, [&](std::size_t i, std::size_t j) {
    return i == j ? diag : kernel(points[i], points[j]);
  });
}

namespace {

double row_prediction(const SparseFactor& f, std::size_t i, const Eigen::VectorXd& resid) {
  double s = 0.0;
  const auto& nb = f.neighbors[i];
  for (std::size_t k = 0; k < nb.size(); ++k) s += f.coef[i][k] * resid[nb[k]];
  return s;
}

void check_size(const SparseFactor& f, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != static_cast<Eigen::Index>(f.size()))
    throw ValidationError(std::string(what) + ": vector length differs from factor size");
}

}  // namespace

double nngp_log_density(const SparseFactor& f, const Eigen::VectorXd& values,
                        const Eigen::VectorXd& mean) {
  check_size(f, values, "nngp_log_density");
  check_size(f, mean, "nngp_log_density");
  const Eigen::VectorXd resid = values - mean;
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    total += normal_log_pdf(resid[i], row_prediction(f, i, resid), f.d[i]);
  return total;
}

Eigen::VectorXd nngp_sample_prior(const SparseFactor& f, const Eigen::VectorXd& mean, Rng& rng) {
  check_size(f, mean, "nngp_sample_prior");
  Eigen::VectorXd resid(mean.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    resid[i] = row_prediction(f, i, resid) + std::sqrt(f.d[i]) * rng.normal();
  return mean + resid;
}

Eigen::VectorXd lower_solve(const SparseFactor& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd v(x.size());
  for (std::size_t i = 0; i < f.size(); ++i) v[i] = x[i] + row_prediction(f, i, v);
  return v;
}

Eigen::VectorXd lower_transpose_solve(const SparseFactor& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd v = x;
  for (std::size_t i = f.size(); i-- > 0;) {
    const auto& nb = f.neighbors[i];
    for (std::size_t k = 0; k < nb.size(); ++k) v[nb[k]] += f.coef[i][k] * v[i];
  }
  return v;
}

Eigen::VectorXd apply_covariance(const SparseFactor& f, const Eigen::VectorXd& x) {
  check_size(f, x, "apply_covariance");
  Eigen::VectorXd y = lower_transpose_solve(f, x);
  y.array() *= f.d.array();
  return lower_solve(f, y);
}

Eigen::VectorXd apply_precision(const SparseFactor& f, const Eigen::VectorXd& x) {
  check_size(f, x, "apply_precision");
  Eigen::VectorXd r(x.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = (x[i] - row_prediction(f, i, x)) / f.d[i];
  // (I - A)^T r
  Eigen::VectorXd out = r;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& nb = f.neighbors[i];
    for (std::size_t k = 0; k < nb.size(); ++k) out[nb[k]] -= f.coef[i][k] * r[i];
  }
  return out;
}

Eigen::MatrixXd dense_covariance(const SparseFactor& f) {
  const auto n = static_cast<Eigen::Index>(f.size());
  const Eigen::MatrixXd l =
      (Eigen::MatrixXd::Identity(n, n) - f.dense_a())
          .triangularView<Eigen::Lower>()
          .solve(Eigen::MatrixXd::Identity(n, n));
  return l * f.d.asDiagonal() * l.transpose();
}

Eigen::MatrixXd dense_precision(const SparseFactor& f) {
  const auto n = static_cast<Eigen::Index>(f.size());
  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(n, n) - f.dense_a();
  return u.transpose() * f.d.cwiseInverse().asDiagonal() * u;
}

Moments conditional_from(std::span<const Point> points, std::span<const std::size_t> neighbors,
                         std::span<const double> resid, const Point& target, double target_mean,
                         const ExpKernel& kernel) {
  const double prior_var = kernel.variance() + kernel.jitter();
  const auto m = static_cast<Eigen::Index>(neighbors.size());
  if (m == 0) return {target_mean, prior_var};
  Eigen::MatrixXd cnn(m, m);
  Eigen::VectorXd c(m), r(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const Point& pa = points[neighbors[a]];
    c[a] = kernel(pa, target);
    r[a] = resid[neighbors[a]];
    cnn(a, a) = prior_var;
    for (Eigen::Index b = a + 1; b < m; ++b) cnn(a, b) = cnn(b, a) = kernel(pa, points[neighbors[b]]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cnn);
  if (llt.info() != Eigen::Success)
    throw NumericalError("neighbor covariance is singular after jitter");
  const Eigen::VectorXd w = llt.solve(c);
  return {target_mean + w.dot(r), clamp_variance(prior_var - w.dot(c))};
}

Moments nngp_conditional_new(std::span<const Point> points, const Eigen::VectorXd& values,
                             const Point& target, std::size_t M, const ExpKernel& kernel,
                             const Eigen::VectorXd* mean, double target_mean) {
  if (M < 1) throw ValidationError("neighbor budget M must be at least 1");
  if (values.size() != static_cast<Eigen::Index>(points.size()))
    throw ValidationError("nngp_conditional_new: values must match the reference points");
  if (mean && mean->size() != values.size())
    throw ValidationError("nngp_conditional_new: mean must match the reference points");
  std::vector<double> resid(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    resid[i] = values[i] - (mean ? (*mean)[i] : 0.0);
  const auto nb = nearest_exhaustive(points, target, M, points.size());
  return conditional_from(points, nb, resid, target, target_mean, kernel);
}

NeighborConditioner::NeighborConditioner(const Domain& bounds, const ExpKernel& kernel,
                                         std::size_t M, std::size_t expected_points)
    : index_(bounds, expected_points), kernel_(kernel), M_(M) {
  if (M < 1) throw ValidationError("neighbor budget M must be at least 1");
  points_.reserve(expected_points);
  resid_.reserve(expected_points);
}

Moments NeighborConditioner::moments(const Point& target, double target_mean) const {
  index_.nearest(target, M_, scratch_);
  return conditional_from(points_, scratch_, resid_, target, target_mean, kernel_);
}

void NeighborConditioner::add(const Point& p, double value, double prior_mean) {
  index_.insert(p);
  points_.push_back(p);
  resid_.push_back(value - prior_mean);
}

void NeighborConditioner::remove_swap_last(std::size_t i) {
  index_.remove_swap_last(i);
  points_[i] = points_.back();
  resid_[i] = resid_.back();
  points_.pop_back();
  resid_.pop_back();
}

}  // namespace exgcp
