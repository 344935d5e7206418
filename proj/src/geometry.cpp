#include "exgcp/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "exgcp/errors.hpp"

namespace exgcp {


Domain::Domain(double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) ||
      !std::isfinite(y_max))
    throw ValidationError("domain bounds must be finite");
  if (!(x_min < x_max) || !(y_min < y_max))
    throw ValidationError("domain needs x_min < x_max and y_min < y_max");
}

EventSet::EventSet(std::size_t T) : slices_(T) {
  if (T == 0) throw ValidationError("event set needs T >= 1");
}

EventSet::EventSet(std::vector<std::vector<Point>> slices) : slices_(std::move(slices)) {
  if (slices_.empty()) throw ValidationError("event set needs T >= 1");
}

std::vector<std::size_t> EventSet::counts() const {
  std::vector<std::size_t> c;
  c.reserve(slices_.size());
  for (const auto& s : slices_) c.push_back(s.size());
  return c;
}

std::size_t EventSet::total() const {
  std::size_t n = 0;
  for (const auto& s : slices_) n += s.size();
  return n;
}

void EventSet::validate_inside(const Domain& d) const {
  for (std::size_t t = 0; t < slices_.size(); ++t)
    for (std::size_t i = 0; i < slices_[t].size(); ++i)
      if (!d.contains(slices_[t][i])) {
        std::ostringstream msg;
        msg << "point " << i << " of slice t=" << t + 1 << " (" << slices_[t][i].x << ", "
            << slices_[t][i].y << ") lies outside the domain";
        throw ValidationError(msg.str());
      }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, const char* name, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ParseError("cannot parse " + std::string(name) + " value '" + std::string(field) + "'",
                     line);
  return v;
}

long long parse_int(std::string_view field, std::size_t line) {
  long long v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("cannot parse time index '" + std::string(field) + "'", line);
  return v;
}

}  // namespace

EventSet load_events(std::istream& in, std::size_t T, const CsvSchema& schema) {
  EventSet events(T);
  std::string line;
  std::size_t line_no = 0;
  std::size_t col_t = 0, col_x = 0, col_y = 0, width = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (!have_header) {
      bool ft = false, fx = false, fy = false;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == schema.t) col_t = i, ft = true;
        if (fields[i] == schema.x) col_x = i, fx = true;
        if (fields[i] == schema.y) col_y = i, fy = true;
      }
      if (!(ft && fx && fy))
        throw ParseError("header must name columns '" + schema.t + "', '" + schema.x +
                             "' and '" + schema.y + "'",
                         line_no);
      width = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() < width)
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    const long long t = parse_int(fields[col_t], line_no);
    const double x = parse_double(fields[col_x], "x", line_no);
    const double y = parse_double(fields[col_y], "y", line_no);
    if (t < 1 || static_cast<std::size_t>(t) > T)
      throw ValidationError("line " + std::to_string(line_no) + ": time index " +
                            std::to_string(t) + " outside 1.." + std::to_string(T));
    events.add(static_cast<std::size_t>(t - 1), Point{x, y});
  }
  return events;
}

EventSet load_events(const std::filesystem::path& path, std::size_t T, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open events file " + path.string());
  return load_events(in, T, schema);
}

void write_events(std::ostream& out, const EventSet& events) {
  out << "t,x,y\n" << std::setprecision(15);
  for (std::size_t t = 0; t < events.T(); ++t)
    for (const auto& p : events.slice(t)) out << t + 1 << ',' << p.x << ',' << p.y << '\n';
}

void write_events(const std::filesystem::path& path, const EventSet& events) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_events(out, events);
}

Point project_point(const Point& p, const Domain& src, const Domain& dst) {
  return Point{dst.x_min() + (p.x - src.x_min()) * (dst.width() / src.width()),
               dst.y_min() + (p.y - src.y_min()) * (dst.height() / src.height())};
}

EventSet project_events(const EventSet& raw, const Domain& src, const Domain& dst) {
  raw.validate_inside(src);
  EventSet out(raw.T());
  for (std::size_t t = 0; t < raw.T(); ++t) {
    auto& s = out.slice(t);
    s.reserve(raw.n(t));
    for (const auto& p : raw.slice(t)) {
      Point q = project_point(p, src, dst);
      // Roundoff can push a boundary point a hair outside the closed target.
      q.x = std::clamp(q.x, dst.x_min(), dst.x_max());
      q.y = std::clamp(q.y, dst.y_min(), dst.y_max());
      s.push_back(q);
    }
  }
  return out;
}

}  // namespace exgcp
