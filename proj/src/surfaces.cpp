#include "exgcp/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "exgcp/errors.hpp"
#include "exgcp/normal.hpp"
#include "exgcp/spatial_index.hpp"

namespace exgcp {

void GridSpec::validate() const {
  if (nx < 2 || ny < 2) throw ValidationError("grid needs nx >= 2 and ny >= 2");
}

Point GridSpec::node(std::size_t i, std::size_t j) const {
  const double hx = (domain.x_max() - domain.x_min()) / static_cast<double>(nx);
  const double hy = (domain.y_max() - domain.y_min()) / static_cast<double>(ny);
  return Point{domain.x_min() + (static_cast<double>(i) + 0.5) * hx,
               domain.y_min() + (static_cast<double>(j) + 0.5) * hy};
}

std::vector<Point> GridSpec::nodes() const {
  std::vector<Point> out;
  out.reserve(size());
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) out.push_back(node(i, j));
  return out;
}

std::vector<Moments> krige_slice(const SliceDraw& slice, const SpaceTimeCovParams& stp,
                                 std::size_t t, std::span<const Point> targets, std::size_t M) {
  if (M < 1) throw ValidationError("kriging needs M >= 1");
  const ExpKernel kernel = ExpKernel::cumulative(stp, t);
  std::vector<Moments> out(targets.size(), Moments{0.0, kernel.variance()});
  if (slice.points.empty()) return out;
  SpatialIndex index(SpatialIndex::bounding_box(slice.points), slice.points.size());
  for (const auto& p : slice.points) index.insert(p);
  std::vector<int> failed(targets.size(), 0);
#pragma omp parallel
  {
    std::vector<std::size_t> nb;
#pragma omp for schedule(dynamic, 64)
    for (std::size_t k = 0; k < targets.size(); ++k) {
      index.nearest(targets[k], M, nb);
      try {
        out[k] = conditional_from(slice.points, nb, slice.z, targets[k], 0.0, kernel);
      } catch (const NumericalError&) {
        failed[k] = 1;
      }
    }
  }
  for (std::size_t k = 0; k < targets.size(); ++k)
    if (failed[k]) throw NumericalError("kriging failed at grid node " + std::to_string(k));
  return out;
}

namespace {

void check_request(const PosteriorDraws& draws, std::size_t t, const GridSpec& grid,
                   const SurfaceOptions& options) {
  grid.validate();
  if (draws.draws.empty()) throw ValidationError("no posterior draws");
  if (t >= draws.T()) throw ValidationError("slice index beyond the fitted horizon");
  if (options.stride < 1) throw ValidationError("draw stride must be >= 1");
}

}  // namespace

IntensityField posterior_intensity_grid(const PosteriorDraws& draws, std::size_t t,
                                        const GridSpec& grid, const SurfaceOptions& options) {
  check_request(draws, t, grid, options);
  const auto nodes = grid.nodes();
  IntensityField field{grid, std::vector<double>(nodes.size(), 0.0), t, false};
  std::size_t used = 0;
  for (std::size_t k = 0; k < draws.draws.size(); k += options.stride) {
    const auto& draw = draws.draws[k];
    const auto& s = draw.slices[t];
    if (s.points.empty()) field.prior_only = true;
    const auto mom = krige_slice(s, draw.theta, t, nodes, options.M);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const double arg = options.integrate_variance ? mom[n].mean / std::sqrt(1.0 + mom[n].var)
                                                    : mom[n].mean;
      field.values[n] += s.lambda_star * normal_cdf(arg);
    }
    ++used;
  }
  for (double& v : field.values) v /= static_cast<double>(used);
  return field;
}

std::vector<double> posterior_mean_z_grid(const PosteriorDraws& draws, std::size_t t,
                                          const GridSpec& grid, const SurfaceOptions& options) {
  check_request(draws, t, grid, options);
  const auto nodes = grid.nodes();
  std::vector<double> z(nodes.size(), 0.0);
  std::size_t used = 0;
  for (std::size_t k = 0; k < draws.draws.size(); k += options.stride) {
    const auto& draw = draws.draws[k];
    const auto mom = krige_slice(draw.slices[t], draw.theta, t, nodes, options.M);
    for (std::size_t n = 0; n < nodes.size(); ++n) z[n] += mom[n].mean;
    ++used;
  }
  for (double& v : z) v /= static_cast<double>(used);
  return z;
}

Prediction predict_next_time(const PosteriorDraws& draws, std::size_t t,
                             const GammaChainPrior& prior, const GridSpec& grid, Rng& rng,
                             const SurfaceOptions& options) {
  prior.validate();
  check_request(draws, t, grid, options);
  Prediction out;
  out.z_grid = posterior_mean_z_grid(draws, t, grid, options);
  for (std::size_t k = 0; k < draws.draws.size(); k += options.stride) {
    const auto& draw = draws.draws[k];
    const double lam = draw.slices[t].lambda_star;
    double pred = 0.0;
    if (prior.w == 0.0) {
      pred = rng.gamma(prior.a0, prior.b0);
    } else {
      double a = prior.a0;
      for (std::size_t s = 0; s <= t; ++s) a = prior.w * a + static_cast<double>(draw.slices[s].K);
      pred = lam * rng.beta(prior.w * a, (1.0 - prior.w) * a) / prior.w;
    }
    out.lambda_pred.push_back(pred);
    out.lambda_fit.push_back(lam);
  }
  double mean_pred = 0.0;
  for (double v : out.lambda_pred) mean_pred += v;
  mean_pred /= static_cast<double>(out.lambda_pred.size());
  out.field.grid = grid;
  out.field.t = t + 1;
  out.field.values.resize(out.z_grid.size());
  for (std::size_t n = 0; n < out.z_grid.size(); ++n)
    out.field.values[n] = mean_pred * normal_cdf(out.z_grid[n]);
  return out;
}

double surface_max_abs_diff(const IntensityField& a, const IntensityField& b) {
  const auto& ga = a.grid;
  const auto& gb = b.grid;
  if (ga.nx != gb.nx || ga.ny != gb.ny || ga.domain.x_min() != gb.domain.x_min() ||
      ga.domain.x_max() != gb.domain.x_max() || ga.domain.y_min() != gb.domain.y_min() ||
      ga.domain.y_max() != gb.domain.y_max() || a.values.size() != b.values.size())
    throw ValidationError("fields are on different grids");
  double m = 0.0;
  for (std::size_t n = 0; n < a.values.size(); ++n) m = std::max(m, std::abs(a.values[n] - b.values[n]));
  return m;
}

IntensityField intensity_from_latent(const GridSpec& grid, std::size_t t, double lambda_star,
                                     const std::function<double(const Point&)>& z) {
  grid.validate();
  IntensityField f{grid, {}, t, false};
  for (const auto& p : grid.nodes()) f.values.push_back(lambda_star * normal_cdf(z(p)));
  return f;
}

void write_field_csv(const std::filesystem::path& path, const IntensityField& field) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  const auto& g = field.grid;
  out << std::setprecision(17);
  out << "# nx=" << g.nx << " ny=" << g.ny << " x_min=" << g.domain.x_min()
      << " x_max=" << g.domain.x_max() << " y_min=" << g.domain.y_min()
      << " y_max=" << g.domain.y_max() << " t=" << field.t + 1 << '\n';
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) out << (i ? "," : "") << field.at(i, j);
    out << '\n';
  }
}

ColorRange write_field_ppm(const std::filesystem::path& path, const IntensityField& field) {
  const auto& g = field.grid;
  ColorRange r{*std::min_element(field.values.begin(), field.values.end()),
               *std::max_element(field.values.begin(), field.values.end())};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << "P6\n" << g.nx << ' ' << g.ny << "\n255\n";
  const double span = r.max > r.min ? r.max - r.min : 1.0;
  // Dark blue to yellow.
  const double lo[3] = {20, 30, 110}, hi[3] = {250, 230, 40};
  for (std::size_t jj = 0; jj < g.ny; ++jj) {
    const std::size_t j = g.ny - 1 - jj;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double u = (field.at(i, j) - r.min) / span;
      for (int c = 0; c < 3; ++c)
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(lo[c] + u * (hi[c] - lo[c])))));
    }
  }
  return r;
}

}  // namespace exgcp
