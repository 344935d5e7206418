#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "exgcp/geometry.hpp"

namespace exgcp {

/// Incremental uniform-grid index answering exact k-nearest-neighbor
/// queries. Results are ordered by (squared distance, id), the same order an
/// exhaustive scan with lower-index tie-breaking produces.
class SpatialIndex {
 public:
  SpatialIndex(const Domain& bounds, std::size_t expected_points);

  /// Bounds covering `pts` (padded when degenerate).
  static Domain bounding_box(std::span<const Point> pts);

  std::size_t insert(const Point& p);
  /// Drop point `id`; the last point is renumbered to `id`.
  void remove_swap_last(std::size_t id);
  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t id) const { return points_[id]; }

  /// Ids of the min(k, size()) nearest points, nearest first.
  void nearest(const Point& q, std::size_t k, std::vector<std::size_t>& out) const;
  std::vector<std::size_t> nearest(const Point& q, std::size_t k) const;

 private:
  std::size_t cell_x(double x) const;
  std::size_t cell_y(double y) const;

  double x0_, y0_, h_;
  std::size_t nx_, ny_;
  std::vector<Point> points_;
  std::vector<std::vector<std::uint32_t>> cells_;
};

/// Reference implementation: full scan with a bounded max-heap.
std::vector<std::size_t> nearest_exhaustive(std::span<const Point> pts, const Point& q,
                                            std::size_t k, std::size_t limit);

}  // namespace exgcp
