#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "exgcp/geometry.hpp"
#include "exgcp/mcmc.hpp"
#include "exgcp/random.hpp"

namespace exgcp {

/// Regular nx x ny grid over a domain; nodes sit at cell centers.
struct GridSpec {
  std::size_t nx = 100;
  std::size_t ny = 100;
  Domain domain{0.0, 1.0, 0.0, 1.0};

  void validate() const;
  std::size_t size() const { return nx * ny; }
  /// Node (i, j): i indexes x, j indexes y.
  Point node(std::size_t i, std::size_t j) const;
  /// All nodes, row-major by y then x (index j * nx + i).
  std::vector<Point> nodes() const;
};

/// Intensity on a grid; values are row-major like GridSpec::nodes().
struct IntensityField {
  GridSpec grid;
  std::vector<double> values;
  std::size_t t = 0;  // 0-based slice
  /// Set when some draw had no reference points in this slice.
  bool prior_only = false;

  double at(std::size_t i, std::size_t j) const { return values[j * grid.nx + i]; }
};

struct SurfaceOptions {
  std::size_t M = 30;
  /// Average lambda* Phi(mu / sqrt(1 + var)) instead of lambda* Phi(mu).
  bool integrate_variance = false;
  /// Use every stride-th retained draw.
  std::size_t stride = 1;
};

/// Kriged moments of z_t at `targets` from one draw's stored points, with the
/// marginal kernel of z_t and zero prior mean, using the M nearest points.
std::vector<Moments> krige_slice(const SliceDraw& slice, const SpaceTimeCovParams& stp,
                                 std::size_t t, std::span<const Point> targets, std::size_t M);

IntensityField posterior_intensity_grid(const PosteriorDraws& draws, std::size_t t,
                                        const GridSpec& grid, const SurfaceOptions& options = {});

/// Posterior mean over draws of the kriged z_t mean at each node.
std::vector<double> posterior_mean_z_grid(const PosteriorDraws& draws, std::size_t t,
                                          const GridSpec& grid,
                                          const SurfaceOptions& options = {});

struct Prediction {
  IntensityField field;              // slice t + 1
  std::vector<double> z_grid;        // predictive z at the nodes
  std::vector<double> lambda_pred;   // one predictive lambda* per used draw
  std::vector<double> lambda_fit;    // lambda*_t of the same draws
};

/// One-step-ahead prediction from draws fitted through slice t (0-based).
Prediction predict_next_time(const PosteriorDraws& draws, std::size_t t,
                             const GammaChainPrior& prior, const GridSpec& grid, Rng& rng,
                             const SurfaceOptions& options = {});

double surface_max_abs_diff(const IntensityField& a, const IntensityField& b);

/// lambda_star * Phi(z(node)) for a known latent function.
IntensityField intensity_from_latent(const GridSpec& grid, std::size_t t, double lambda_star,
                                     const std::function<double(const Point&)>& z);

/// Header line with grid metadata, then ny rows of nx values (lowest y first).
void write_field_csv(const std::filesystem::path& path, const IntensityField& field);

struct ColorRange {
  double min = 0.0;
  double max = 0.0;
};
/// Binary PPM heatmap, top row at the largest y, linear ramp between min and max.
ColorRange write_field_ppm(const std::filesystem::path& path, const IntensityField& field);

}  // namespace exgcp
