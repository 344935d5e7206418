#include "exgcp/draws_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "exgcp/errors.hpp"

namespace exgcp {

namespace {

constexpr char kMagic[8] = {'E', 'X', 'G', 'C', 'P', 'D', 'R', '1'};
constexpr const char* kCsvHeader = "# exgcp draws v1";

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ValidationError("draws file truncated");
  return v;
}
double get_f64(std::istream& in) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ValidationError("draws file truncated");
  return v;
}

void put_stp(std::ostream& out, const SpaceTimeCovParams& p) {
  put_f64(out, p.theta1.sigma2);
  put_f64(out, p.theta1.phi);
  put_f64(out, p.theta.sigma2);
  put_f64(out, p.theta.phi);
}
SpaceTimeCovParams get_stp(std::istream& in) {
  SpaceTimeCovParams p;
  p.theta1.sigma2 = get_f64(in);
  p.theta1.phi = get_f64(in);
  p.theta.sigma2 = get_f64(in);
  p.theta.phi = get_f64(in);
  return p;
}

void write_binary(std::ostream& out, const PosteriorDraws& d) {
  out.write(kMagic, sizeof kMagic);
  put_u64(out, d.T());
  put_u64(out, d.draws.size());
  put_u64(out, d.M);
  put_f64(out, d.domain.x_min());
  put_f64(out, d.domain.x_max());
  put_f64(out, d.domain.y_min());
  put_f64(out, d.domain.y_max());
  put_stp(out, d.stp);
  for (const auto& draw : d.draws) {
    put_stp(out, draw.theta);
    for (const auto& s : draw.slices) {
      put_f64(out, s.lambda_star);
      put_u64(out, s.K);
      put_u64(out, s.n_observed);
      put_u64(out, s.points.size());
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        put_f64(out, s.points[i].x);
        put_f64(out, s.points[i].y);
        put_f64(out, s.z[i]);
      }
    }
  }
}

PosteriorDraws read_binary(std::istream& in) {
  PosteriorDraws d;
  const std::uint64_t T = get_u64(in);
  const std::uint64_t n = get_u64(in);
  d.M = get_u64(in);
  const double x0 = get_f64(in), x1 = get_f64(in), y0 = get_f64(in), y1 = get_f64(in);
  d.domain = Domain(x0, x1, y0, y1);
  d.stp = get_stp(in);
  d.draws.resize(n);
  for (auto& draw : d.draws) {
    draw.theta = get_stp(in);
    draw.slices.resize(T);
    for (auto& s : draw.slices) {
      s.lambda_star = get_f64(in);
      s.K = get_u64(in);
      s.n_observed = get_u64(in);
      const std::uint64_t stored = get_u64(in);
      if (stored > s.K) throw ValidationError("draws file: stored points exceed K");
      s.points.resize(stored);
      s.z.resize(stored);
      for (std::uint64_t i = 0; i < stored; ++i) {
        s.points[i].x = get_f64(in);
        s.points[i].y = get_f64(in);
        s.z[i] = get_f64(in);
      }
    }
  }
  return d;
}

// CSV: a header block of key=value comment lines, then rows
//   draw,t,lambda_star,K,n_observed,x,y,z
// with one row per stored point (x,y,z empty when a slice stores none).
void write_csv(std::ostream& out, const PosteriorDraws& d) {
  out << std::setprecision(17);
  out << kCsvHeader << '\n';
  out << "# T=" << d.T() << " n_draws=" << d.draws.size() << " M=" << d.M << '\n';
  out << "# domain=" << d.domain.x_min() << ',' << d.domain.x_max() << ',' << d.domain.y_min()
      << ',' << d.domain.y_max() << '\n';
  out << "# stp=" << d.stp.theta1.sigma2 << ',' << d.stp.theta1.phi << ',' << d.stp.theta.sigma2
      << ',' << d.stp.theta.phi << '\n';
  out << "draw,t,lambda_star,K,n_observed,sigma2_1,phi_1,sigma2,phi,x,y,z\n";
  for (std::size_t k = 0; k < d.draws.size(); ++k) {
    const auto& draw = d.draws[k];
    for (std::size_t t = 0; t < draw.slices.size(); ++t) {
      const auto& s = draw.slices[t];
      auto prefix = [&] {
        out << k << ',' << t + 1 << ',' << s.lambda_star << ',' << s.K << ',' << s.n_observed << ','
            << draw.theta.theta1.sigma2 << ',' << draw.theta.theta1.phi << ','
            << draw.theta.theta.sigma2 << ',' << draw.theta.theta.phi << ',';
      };
      if (s.points.empty()) {
        prefix();
        out << ",,\n";
      }
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        prefix();
        out << s.points[i].x << ',' << s.points[i].y << ',' << s.z[i] << '\n';
      }
    }
  }
}

std::vector<double> split_doubles(const std::string& s, std::size_t line) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ParseError("bad number '" + tok + "'", line);
    }
  }
  return v;
}

PosteriorDraws read_csv(std::istream& in) {
  PosteriorDraws d;
  std::string line;
  std::size_t lineno = 0;
  std::size_t T = 0, n = 0;
  auto value_after = [](const std::string& s, const std::string& key) {
    const auto pos = s.find(key + "=");
    if (pos == std::string::npos) return std::string();
    const auto start = pos + key.size() + 1;
    return s.substr(start, s.find(' ', start) - start);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("draw,", 0) == 0) break;
    if (line.rfind("# T=", 0) == 0) {
      T = std::stoull(value_after(line, "T"));
      n = std::stoull(value_after(line, "n_draws"));
      d.M = std::stoull(value_after(line, "M"));
    } else if (line.rfind("# domain=", 0) == 0) {
      const auto v = split_doubles(line.substr(9), lineno);
      if (v.size() != 4) throw ParseError("domain needs 4 values", lineno);
      d.domain = Domain(v[0], v[1], v[2], v[3]);
    } else if (line.rfind("# stp=", 0) == 0) {
      const auto v = split_doubles(line.substr(6), lineno);
      if (v.size() != 4) throw ParseError("stp needs 4 values", lineno);
      d.stp = SpaceTimeCovParams{{v[0], v[1]}, {v[2], v[3]}};
    }
  }
  d.draws.assign(n, Draw{});
  for (auto& draw : d.draws) draw.slices.resize(T);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() == 11) f.emplace_back();  // trailing empty z
    if (f.size() != 12) throw ParseError("expected 12 fields", lineno);
    try {
      const std::size_t k = std::stoull(f[0]);
      const std::size_t t = std::stoull(f[1]);
      if (k >= n || t < 1 || t > T) throw ParseError("draw or slice index out of range", lineno);
      auto& draw = d.draws[k];
      draw.theta = SpaceTimeCovParams{{std::stod(f[5]), std::stod(f[6])},
                                      {std::stod(f[7]), std::stod(f[8])}};
      auto& s = draw.slices[t - 1];
      s.lambda_star = std::stod(f[2]);
      s.K = std::stoull(f[3]);
      s.n_observed = std::stoull(f[4]);
      if (!f[9].empty()) {
        s.points.push_back(Point{std::stod(f[9]), std::stod(f[10])});
        s.z.push_back(std::stod(f[11]));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("malformed draws row", lineno);
    }
  }
  return d;
}

}  // namespace

void write_draws(std::ostream& out, const PosteriorDraws& draws, DrawsFormat format) {
  if (format == DrawsFormat::kBinary)
    write_binary(out, draws);
  else
    write_csv(out, draws);
}

void write_draws(const std::filesystem::path& path, const PosteriorDraws& draws,
                 DrawsFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  write_draws(out, draws, format);
}

PosteriorDraws read_draws(std::istream& in) {
  char head[8] = {};
  in.read(head, sizeof head);
  if (in.gcount() == 8 && std::memcmp(head, kMagic, 8) == 0) return read_binary(in);
  in.clear();
  in.seekg(0);
  std::string first;
  std::getline(in, first);
  if (first != kCsvHeader) throw ValidationError("not an exgcp draws file");
  return read_csv(in);
}

PosteriorDraws read_draws(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_draws(in);
}

}  // namespace exgcp
