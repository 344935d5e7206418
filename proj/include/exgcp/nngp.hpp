#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "exgcp/errors.hpp"
#include "exgcp/gp_core.hpp"
#include "exgcp/random.hpp"
#include "exgcp/spatial_index.hpp"

namespace exgcp {

enum class NeighborSearch { kGrid, kExhaustive };

/// Directed acyclic neighbor structure over an ordered reference set:
/// neighbors[i] holds the (at most M) nearest of points 0..i-1, sorted by
/// index. `order[i]` is the position in the caller's original list of the
/// i-th point in the sequential ordering.
struct NeighborGraph {
  std::size_t M = 0;
  std::vector<std::size_t> order;
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t size() const { return neighbors.size(); }
};

/// Graph over `points` taken in the given order.
NeighborGraph build_neighbor_graph(std::span<const Point> points, std::size_t M,
                                   NeighborSearch search = NeighborSearch::kGrid);

/// Permutation sorting points by x, then y, then original index.
std::vector<std::size_t> lexicographic_order(std::span<const Point> points);

/// Sparse (A, D) factor: z_i = sum_{j in N_i} A_ij z_j + eta_i, eta_i ~ N(0, d_i).
struct SparseFactor {
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<Eigen::VectorXd> coef;
  Eigen::VectorXd d;

  std::size_t size() const { return neighbors.size(); }
  Eigen::MatrixXd dense_a() const;
};

/// Factor rows from an index covariance `cov(i, j)`, which must include any
/// diagonal jitter. Rows are independent and computed in parallel; the output
/// does not depend on the thread count.
template <class Cov>
SparseFactor nngp_factor_from(const NeighborGraph& graph, const Cov& cov) {
  const std::size_t n = graph.size();
  SparseFactor f;
  f.neighbors = graph.neighbors;
  f.coef.resize(n);
  f.d.resize(static_cast<Eigen::Index>(n));
  std::vector<int> failed(n, 0);
#pragma omp parallel for schedule(dynamic, 32)
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = graph.neighbors[i];
    const auto m = static_cast<Eigen::Index>(nb.size());
    const double cii = cov(i, i);
    if (m == 0) {
      f.d[i] = cii;
      failed[i] = !(cii > 0.0);
      continue;
    }
    Eigen::MatrixXd cnn(m, m);
    Eigen::VectorXd c(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      c[a] = cov(i, nb[a]);
      cnn(a, a) = cov(nb[a], nb[a]);
      for (Eigen::Index b = a + 1; b < m; ++b) cnn(a, b) = cnn(b, a) = cov(nb[a], nb[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cnn);
    if (llt.info() != Eigen::Success) {
      failed[i] = 1;
      continue;
    }
    f.coef[i] = llt.solve(c);
    f.d[i] = cii - f.coef[i].dot(c);
    failed[i] = !(f.d[i] > 0.0);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (failed[i]) {
      std::ostringstream msg;
      msg << "NNGP factor: neighbor covariance of row " << i << " is singular after jitter";
      throw NumericalError(msg.str());
    }
  return f;
}

SparseFactor nngp_factor(const NeighborGraph& graph, std::span<const Point> points,
                         const ExpKernel& kernel);

double nngp_log_density(const SparseFactor& f, const Eigen::VectorXd& values,
                        const Eigen::VectorXd& mean);

Eigen::VectorXd nngp_sample_prior(const SparseFactor& f, const Eigen::VectorXd& mean, Rng& rng);

/// (I - A)^{-1} x.
Eigen::VectorXd lower_solve(const SparseFactor& f, const Eigen::VectorXd& x);
/// (I - A)^{-T} x.
Eigen::VectorXd lower_transpose_solve(const SparseFactor& f, const Eigen::VectorXd& x);
/// C~ x = (I - A)^{-1} D (I - A)^{-T} x in O(nM).
Eigen::VectorXd apply_covariance(const SparseFactor& f, const Eigen::VectorXd& x);
/// C~^{-1} x = (I - A)^T D^{-1} (I - A) x in O(nM).
Eigen::VectorXd apply_precision(const SparseFactor& f, const Eigen::VectorXd& x);
Eigen::MatrixXd dense_covariance(const SparseFactor& f);
Eigen::MatrixXd dense_precision(const SparseFactor& f);

/// Conditional moments of z(target) given z at the listed reference points.
Moments conditional_from(std::span<const Point> points, std::span<const std::size_t> neighbors,
                         std::span<const double> resid, const Point& target, double target_mean,
                         const ExpKernel& kernel);

/// Moments of z(target) given the M nearest reference points. `mean` holds
/// prior means at the references (zeros when omitted).
Moments nngp_conditional_new(std::span<const Point> points, const Eigen::VectorXd& values,
                             const Point& target, std::size_t M, const ExpKernel& kernel,
                             const Eigen::VectorXd* mean = nullptr, double target_mean = 0.0);

/// Incremental conditioning on the M nearest absorbed points; the NNGP
/// counterpart of DenseConditioner.
class NeighborConditioner final : public SequentialConditioner {
 public:
  NeighborConditioner(const Domain& bounds, const ExpKernel& kernel, std::size_t M,
                      std::size_t expected_points);

  std::size_t size() const override { return index_.size(); }
  Moments moments(const Point& target, double target_mean) const override;
  void add(const Point& p, double value, double prior_mean) override;
  void remove_swap_last(std::size_t i) override;

 private:
  SpatialIndex index_;
  ExpKernel kernel_;
  std::size_t M_;
  std::vector<Point> points_;
  std::vector<double> resid_;
  mutable std::vector<std::size_t> scratch_;
};

}  // namespace exgcp
