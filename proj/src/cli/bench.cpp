#include "cli/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>

#include "exgcp/mcmc.hpp"
#include "exgcp/nngp.hpp"

namespace exgcp::cli {

namespace {

struct Fixture {
  AugmentedState state;
  Domain domain{0.0, 1.0, 0.0, 1.0};
};

Fixture make_fixture(std::size_t K, double density, std::uint64_t seed) {
  const double side = std::sqrt(static_cast<double>(K) / density);
  Fixture f;
  f.domain = Domain(0.0, side, 0.0, side);
  Rng rng(derive_seed(seed, {K}));
  SliceState s;
  for (std::size_t i = 0; i < K; ++i) s.points.push_back(Point{rng.uniform(0.0, side), rng.uniform(0.0, side)});
  s.n_observed = K / 2;
  std::sort(s.points.begin(), s.points.begin() + static_cast<std::ptrdiff_t>(s.n_observed),
            [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  f.state.stp = SpaceTimeCovParams{{1.0, 2.0}, {0.3, 3.0}};
  const auto graph = build_neighbor_graph(s.points, 10);
  const auto z = nngp_sample_prior(nngp_factor(graph, s.points, ExpKernel(f.state.stp.theta1)),
                                   Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K)), rng);
  s.z.assign(z.data(), z.data() + K);
  s.lambda_star = density;
  f.state.slices.push_back(std::move(s));
  return f;
}

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Case {
  BenchPoint point;
  Fixture fixture;
  SamplerSettings settings;
};

// Runs block `which` (0 latent, 1 thinned, 2 lambda*) once on a copy of the state.
void run_block(const Case& c, int which, std::uint64_t seed, std::size_t call) {
  const auto& f = c.fixture;
  Rng rng(derive_seed(seed, {c.point.K, c.point.M, call, static_cast<std::uint64_t>(which)}));
  if (which == 2) {
    const std::size_t k[1] = {c.point.K};
    sample_lambda_star(k, f.domain, GammaChainPrior{}, rng);
    return;
  }
  AugmentedState st = f.state;
  if (which == 0)
    sample_latent_slice(st, 0, c.settings, rng);
  else
    sample_thinned_slice(st, 0, f.domain, c.settings, rng);
}

// Per-call seconds for every case and block. Each sample loops a block for
// about 20 ms so short blocks are not at the mercy of timer granularity.
// Cases are visited round-robin within each repeat, so a slow spell on a
// shared machine hits all sizes alike; the minimum over repeats is kept.
void time_cases(std::vector<Case>& cases, const BenchSettings& bs) {
  std::vector<std::array<std::size_t, 3>> loops(cases.size());
  std::size_t call = 0;
  for (std::size_t i = 0; i < cases.size(); ++i)
    for (int b = 0; b < 3; ++b) {
      const auto start = Clock::now();
      run_block(cases[i], b, bs.seed, call++);
      const double once = std::max(elapsed(start), 1e-7);
      loops[i][b] = static_cast<std::size_t>(std::clamp(0.02 / once, 1.0, 1000.0));
    }
  std::vector<std::array<double, 3>> best(cases.size());
  for (auto& v : best) v.fill(std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < bs.repeats; ++r)
    for (std::size_t i = 0; i < cases.size(); ++i)
      for (int b = 0; b < 3; ++b) {
        const auto start = Clock::now();
        for (std::size_t l = 0; l < loops[i][b]; ++l) run_block(cases[i], b, bs.seed, call++);
        best[i][b] = std::min(best[i][b], elapsed(start) / static_cast<double>(loops[i][b]));
      }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    cases[i].point.latent_seconds = best[i][0];
    cases[i].point.thinned_seconds = best[i][1];
    cases[i].point.lambda_seconds = best[i][2];
  }
}

std::vector<BenchPoint> measure(const std::vector<std::pair<std::size_t, std::size_t>>& km,
                                bool dense, const BenchSettings& bs) {
  std::vector<Case> cases;
  for (const auto& [K, M] : km) {
    Case c{BenchPoint{K, M, dense, 0.0, 0.0, 0.0}, make_fixture(K, bs.density, bs.seed), {}};
    c.settings.M = M;
    c.settings.mode = dense ? GpMode::kDense : GpMode::kNngp;
    cases.push_back(std::move(c));
  }
  time_cases(cases, bs);
  std::vector<BenchPoint> out;
  for (const auto& c : cases) out.push_back(c.point);
  return out;
}

}  // namespace

double fit_exponent(const std::vector<BenchPoint>& points) {
  if (points.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(points.size());
  for (const auto& p : points) {
    const double x = std::log(static_cast<double>(p.K));
    const double y = std::log(std::max(p.latent_seconds, 1e-12));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

BenchReport run_bench(const BenchSettings& bs) {
  BenchReport r;
  std::vector<std::pair<std::size_t, std::size_t>> km;
  for (std::size_t K : bs.sizes) km.emplace_back(K, bs.M);
  r.nngp = measure(km, false, bs);
  km.clear();
  for (std::size_t M : bs.M_values) km.emplace_back(bs.M_sweep_K, M);
  r.m_sweep = measure(km, false, bs);
  km.clear();
  for (std::size_t K : bs.dense_sizes) km.emplace_back(K, K);
  r.dense = measure(km, true, bs);
  r.nngp_exponent = fit_exponent(r.nngp);
  r.dense_exponent = fit_exponent(r.dense);
  return r;
}

Json bench_to_json(const BenchReport& report) {
  auto rows = [](const std::vector<BenchPoint>& pts) {
    Json a = Json::array();
    for (const auto& p : pts)
      a.push_back(Json{{"K", p.K},
                       {"M", p.M},
                       {"mode", p.dense ? "dense" : "nngp"},
                       {"latent_seconds", p.latent_seconds},
                       {"thinned_seconds", p.thinned_seconds},
                       {"lambda_seconds", p.lambda_seconds}});
    return a;
  };
  return Json{{"nngp", rows(report.nngp)},
              {"m_sweep", rows(report.m_sweep)},
              {"dense", rows(report.dense)},
              {"nngp_latent_exponent", report.nngp_exponent},
              {"dense_latent_exponent", report.dense_exponent}};
}

}  // namespace exgcp::cli
