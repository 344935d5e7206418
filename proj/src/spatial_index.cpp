#include "exgcp/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

namespace exgcp {

namespace {

using Candidate = std::pair<double, std::size_t>;  // (squared distance, id)

// Max-heap on (d2, id): the top is the current worst retained candidate.
class BoundedHeap {
 public:
  explicit BoundedHeap(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  void offer(double d2, std::size_t id) {
    if (k_ == 0) return;
    if (heap_.size() < k_) {
      heap_.emplace_back(d2, id);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (Candidate{d2, id} < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = {d2, id};
      std::push_heap(heap_.begin(), heap_.end());
    }
  }
  bool full() const { return heap_.size() == k_; }
  double worst() const { return heap_.front().first; }

  void drain(std::vector<std::size_t>& out) {
    std::sort(heap_.begin(), heap_.end());
    out.clear();
    for (const auto& c : heap_) out.push_back(c.second);
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

}  // namespace

SpatialIndex::SpatialIndex(const Domain& bounds, std::size_t expected_points)
    : x0_(bounds.x_min()), y0_(bounds.y_min()) {
  constexpr double kPointsPerCell = 3.0;
  constexpr std::size_t kMaxCellsPerAxis = 1024;
  const double n = std::max<double>(1.0, static_cast<double>(expected_points));
  h_ = std::sqrt(bounds.area() * kPointsPerCell / n);
  h_ = std::max(h_, std::max(bounds.width(), bounds.height()) / kMaxCellsPerAxis);
  nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.width() / h_)));
  ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.height() / h_)));
  cells_.resize(nx_ * ny_);
  points_.reserve(expected_points);
}

Domain SpatialIndex::bounding_box(std::span<const Point> pts) {
  if (pts.empty()) return Domain(0.0, 1.0, 0.0, 1.0);
  double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double pad = 1e-9 * std::max({1.0, x1 - x0, y1 - y0});
  if (x1 - x0 < pad) x0 -= pad, x1 += pad;
  if (y1 - y0 < pad) y0 -= pad, y1 += pad;
  return Domain(x0, x1, y0, y1);
}

std::size_t SpatialIndex::cell_x(double x) const {
  const double c = std::floor((x - x0_) / h_);
  if (!(c > 0.0)) return 0;
  return std::min(nx_ - 1, static_cast<std::size_t>(c));
}

std::size_t SpatialIndex::cell_y(double y) const {
  const double c = std::floor((y - y0_) / h_);
  if (!(c > 0.0)) return 0;
  return std::min(ny_ - 1, static_cast<std::size_t>(c));
}

std::size_t SpatialIndex::insert(const Point& p) {
  const std::size_t id = points_.size();
  points_.push_back(p);
  cells_[cell_y(p.y) * nx_ + cell_x(p.x)].push_back(static_cast<std::uint32_t>(id));
  return id;
}

void SpatialIndex::remove_swap_last(std::size_t id) {
  auto cell_of = [&](std::size_t i) -> std::vector<std::uint32_t>& {
    return cells_[cell_y(points_[i].y) * nx_ + cell_x(points_[i].x)];
  };
  auto& home = cell_of(id);
  home.erase(std::find(home.begin(), home.end(), static_cast<std::uint32_t>(id)));
  const std::size_t last = points_.size() - 1;
  if (id != last) {
    auto& moved = cell_of(last);
    *std::find(moved.begin(), moved.end(), static_cast<std::uint32_t>(last)) =
        static_cast<std::uint32_t>(id);
    points_[id] = points_[last];
  }
  points_.pop_back();
}

void SpatialIndex::nearest(const Point& q, std::size_t k, std::vector<std::size_t>& out) const {
  if (k == 0 || points_.empty()) {
    out.clear();
    return;
  }
  BoundedHeap heap(std::min(k, points_.size()));
  const auto cx = static_cast<long>(cell_x(q.x));
  const auto cy = static_cast<long>(cell_y(q.y));
  const long max_ring = static_cast<long>(std::max(nx_, ny_));
  auto scan = [&](long ix, long iy) {
    if (ix < 0 || iy < 0 || ix >= static_cast<long>(nx_) || iy >= static_cast<long>(ny_)) return;
    for (std::uint32_t id : cells_[static_cast<std::size_t>(iy) * nx_ + ix])
      heap.offer(squared_distance(q, points_[id]), id);
  };
  for (long r = 0; r <= max_ring; ++r) {
    if (r == 0) {
      scan(cx, cy);
    } else {
      for (long ix = cx - r; ix <= cx + r; ++ix) {
        scan(ix, cy - r);
        scan(ix, cy + r);
      }
      for (long iy = cy - r + 1; iy <= cy + r - 1; ++iy) {
        scan(cx - r, iy);
        scan(cx + r, iy);
      }
    }
    if (heap.full()) {
      // Every unscanned point lies outside the square of rings 0..r.
      const double lb = std::min({q.x - (x0_ + static_cast<double>(cx - r) * h_),
                                  x0_ + static_cast<double>(cx + r + 1) * h_ - q.x,
                                  q.y - (y0_ + static_cast<double>(cy - r) * h_),
                                  y0_ + static_cast<double>(cy + r + 1) * h_ - q.y});
      if (lb > 0.0 && heap.worst() < lb * lb) break;
    }
  }
  heap.drain(out);
}

std::vector<std::size_t> SpatialIndex::nearest(const Point& q, std::size_t k) const {
  std::vector<std::size_t> out;
  nearest(q, k, out);
  return out;
}

std::vector<std::size_t> nearest_exhaustive(std::span<const Point> pts, const Point& q,
                                            std::size_t k, std::size_t limit) {
  limit = std::min(limit, pts.size());
  BoundedHeap heap(std::min(k, limit));
  for (std::size_t j = 0; j < limit; ++j) heap.offer(squared_distance(q, pts[j]), j);
  std::vector<std::size_t> out;
  heap.drain(out);
  return out;
}

}  // namespace exgcp
