#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace exgcp {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

/// Closed axis-aligned rectangle [x_min, x_max] x [y_min, y_max].
class Domain {
 public:
  Domain(double x_min, double x_max, double y_min, double y_max);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }
  bool contains(const Point& p) const {
    return p.x >= x_min_ && p.x <= x_max_ && p.y >= y_min_ && p.y <= y_max_;
  }

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  double x_min_, x_max_, y_min_, y_max_;
};

/// Observed point pattern S = {S_1, ..., S_T}. Slices are stored 0-based;
/// file formats and the CLI use 1-based t.
class EventSet {
 public:
  explicit EventSet(std::size_t T);
  explicit EventSet(std::vector<std::vector<Point>> slices);

  std::size_t T() const { return slices_.size(); }
  std::size_t n(std::size_t t) const { return slices_.at(t).size(); }
  std::vector<std::size_t> counts() const;
  std::size_t total() const;

  const std::vector<Point>& slice(std::size_t t) const { return slices_.at(t); }
  std::vector<Point>& slice(std::size_t t) { return slices_.at(t); }
  void add(std::size_t t, const Point& p) { slices_.at(t).push_back(p); }

  /// Throws ValidationError naming the first point outside `d`.
  void validate_inside(const Domain& d) const;

 private:
  std::vector<std::vector<Point>> slices_;
};

/// Column names for the event CSV; extra columns are ignored.
struct CsvSchema {
  std::string t = "t";
  std::string x = "x";
  std::string y = "y";
};

EventSet load_events(std::istream& in, std::size_t T, const CsvSchema& schema = {});
EventSet load_events(const std::filesystem::path& path, std::size_t T,
                     const CsvSchema& schema = {});

/// Writes `t,x,y` rows, 1-based t, 15 significant digits.
void write_events(std::ostream& out, const EventSet& events);
void write_events(const std::filesystem::path& path, const EventSet& events);

/// Affine rectangle-to-rectangle map.
Point project_point(const Point& p, const Domain& src, const Domain& dst);
EventSet project_events(const EventSet& raw, const Domain& src, const Domain& dst);

}  // namespace exgcp
