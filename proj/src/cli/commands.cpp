#include "cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <omp.h>

#include "cli/bench.hpp"
#include "exgcp/diagnostics.hpp"
#include "exgcp/draws_io.hpp"
#include "exgcp/mcmc.hpp"
#include "exgcp/simulator.hpp"
#include "exgcp/surfaces.hpp"

#ifndef EXGCP_VERSION
#define EXGCP_VERSION "0.0.0"
#endif

namespace exgcp::cli {

namespace fs = std::filesystem;

std::string version() { return EXGCP_VERSION; }

namespace {

struct Run {
  ConfigReader r;
  fs::path out;
  int threads = 0;

  explicit Run(const Json& cfg) : r(cfg) {
    out = r.text("out");
    // Thread count changes no output, so it stays out of the replayable config.
    if (cfg.contains("threads") && !cfg["threads"].is_null()) {
      if (!cfg["threads"].is_number_integer() || cfg["threads"].get<int>() < 1)
        throw ValidationError("threads must be a positive integer");
      threads = cfg["threads"].get<int>();
      omp_set_num_threads(threads);
    }
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ValidationError("cannot create output directory " + out.string());
  }

  void manifest(const std::string& command) const {
    Json m{{"command", command}, {"version", version()}};
    const Json& eff = r.effective();
    m["seed"] = eff.contains("seed") ? eff["seed"] : Json();
    m["threads"] = threads > 0 ? threads : omp_get_max_threads();
    m["config"] = eff;
    std::ofstream f(out / "manifest.json");
    f << std::setw(2) << m << '\n';
  }
};

void write_json(const fs::path& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << std::setw(2) << j << '\n';
}

SpaceTimeCovParams read_stp(ConfigReader& r) {
  SpaceTimeCovParams stp{{r.number("sigma2_1", 1.0), r.number("phi_1", 2.0)},
                         {r.number("sigma2", 0.3), r.number("phi", 3.0)}};
  stp.validate();
  return stp;
}

GammaChainPrior read_prior(ConfigReader& r) {
  GammaChainPrior p{r.number("a0", 100.0), r.number("b0", 10.0), r.number("w", 0.0)};
  p.validate();
  return p;
}

template <class E>
E choose(ConfigReader& r, const std::string& key, const std::string& fallback,
         std::initializer_list<std::pair<const char*, E>> options) {
  const std::string v = r.text(key, fallback);
  for (const auto& [name, value] : options)
    if (v == name) return value;
  std::string allowed;
  for (const auto& o : options) allowed += std::string(allowed.empty() ? "" : ", ") + o.first;
  throw ValidationError("setting '" + key + "' must be one of: " + allowed);
}

std::size_t slice_index(std::size_t t1, std::size_t T, const std::string& what) {
  if (t1 < 1 || t1 > T)
    throw ValidationError(what + " must lie in 1.." + std::to_string(T));
  return t1 - 1;
}

// Reads a single numeric column from a headed CSV.
std::vector<double> read_series(const fs::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open series " + path.string());
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty series file", 1);
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) head.push_back(tok);
  }
  std::size_t col = 0;
  if (!column.empty()) {
    const auto it = std::find(head.begin(), head.end(), column);
    if (it == head.end()) throw ParseError("no column '" + column + "'", 1);
    col = static_cast<std::size_t>(it - head.begin());
  }
  std::vector<double> v;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    for (std::size_t c = 0; c <= col; ++c)
      if (!std::getline(ss, tok, ',')) throw ParseError("missing column", lineno);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
    } catch (const std::exception&) {
      throw ParseError("bad number '" + tok + "'", lineno);
    }
  }
  return v;
}

Json inefficiency_or_null(const std::vector<double>& s) {
  try {
    return inefficiency_factor(s);
  } catch (const ValidationError&) {
    return Json();
  }
}

}  // namespace

Json cmd_simulate(const Json& cfg) {
  Run run(cfg);
  auto& r = run.r;
  const std::uint64_t seed = r.seed();
  const Domain d = r.domain();
  const auto lambda = r.numbers("lambda");
  if (lambda.empty()) throw ValidationError("lambda needs at least one value");
  const SpaceTimeCovParams stp = read_stp(r);
  SimOptions opts;
  opts.dense_limit = r.count("dense_limit", opts.dense_limit);
  opts.M = r.count("sim_M", opts.M);

  Rng rng(seed);
  const SimOutput sim = simulate_exgcp_spacetime(lambda, stp, d, rng, opts);
  write_events(run.out / "events.csv", sim.events);
  {
    std::ofstream f(run.out / "latent.csv");
    f << "t,x,y,z,retained\n" << std::setprecision(17);
    for (std::size_t t = 0; t < sim.latent.size(); ++t) {
      const auto& s = sim.latent[t];
      for (std::size_t i = 0; i < s.points.size(); ++i)
        f << t + 1 << ',' << s.points[i].x << ',' << s.points[i].y << ',' << s.z[i] << ','
          << int(s.retained[i]) << '\n';
    }
  }
  Json report{{"T", sim.events.T()}, {"counts", sim.events.counts()},
              {"thinned_counts", sim.thinned.counts()}};
  write_json(run.out / "simulation.json", report);
  run.manifest("simulate");
  return report;
}

Json cmd_fit(const Json& cfg) {
  Run run(cfg);
  auto& r = run.r;
  ChainConfig cc;
  cc.seed = r.seed();
  const fs::path events_path = r.text("events");
  const std::size_t T = r.count("T");
  const Domain d = r.domain();
  CsvSchema schema{r.text("col_t", "t"), r.text("col_x", "x"), r.text("col_y", "y")};
  EventSet events = load_events(events_path, T, schema);
  if (r.has("source_domain")) events = project_events(events, r.domain("source_domain"), d);

  cc.M = r.count("M", cc.M);
  cc.n_iter = r.count("n_iter", cc.n_iter);
  cc.burn_in = r.count("burn_in", cc.burn_in);
  cc.stp = read_stp(r);
  cc.prior = read_prior(r);
  cc.sample_theta = r.flag("sample_theta", false);
  cc.theta_proposal_sd = r.number("theta_sd", cc.theta_proposal_sd);
  cc.max_proposals_per_thinned_point = r.count("max_proposals", cc.max_proposals_per_thinned_point);
  if (r.has("fixed_lambda")) cc.fixed_lambda_star = r.numbers("fixed_lambda");
  cc.mode = choose<GpMode>(r, "mode", "nngp", {{"nngp", GpMode::kNngp}, {"dense", GpMode::kDense}});
  cc.thinning = choose<ThinningScheme>(
      r, "thinning", "birth_death",
      {{"birth_death", ThinningScheme::kBirthDeath},
       {"poisson", ThinningScheme::kPoissonThinning},
       {"fixed_count", ThinningScheme::kFixedCount}});
  cc.birth_death_moves = r.number("bd_moves", cc.birth_death_moves);
  cc.latent = choose<LatentScheme>(
      r, "latent", "gibbs",
      {{"gibbs", LatentScheme::kGibbsAugmented}, {"sequential", LatentScheme::kSequentialNngp}});
  cc.store_thinned = r.flag("store_thinned", true);
  cc.allow_empty = r.flag("allow_empty", false);
  cc.dump_dir = run.out;
  const auto format = choose<DrawsFormat>(r, "draws_format", "binary",
                                          {{"binary", DrawsFormat::kBinary}, {"csv", DrawsFormat::kCsv}});
  const bool quiet = r.flag("quiet", true);

  const auto draws = run_chain(events, cc, d, [&](std::size_t it) {
    if (!quiet && (it + 1) % 50 == 0) std::cerr << "iteration " << it + 1 << "/" << cc.n_iter << '\n';
  });
  const fs::path draws_path = run.out / (format == DrawsFormat::kBinary ? "draws.bin" : "draws.csv");
  write_draws(draws_path, draws, format);

  Json slices = Json::array();
  for (std::size_t t = 0; t < T; ++t) {
    const auto lam = draws.lambda_series(t);
    const auto k = draws.K_series(t);
    const double prop = static_cast<double>(draws.stats.thinning_proposals[t]);
    slices.push_back(Json{
        {"t", t + 1},
        {"n_observed", events.slice(t).size()},
        {"lambda_star_mean", mean(lam)},
        {"lambda_star_sd", lam.size() > 1 ? std::sqrt(variance(lam)) : 0.0},
        {"K_mean", mean(k)},
        {"thinning_acceptance",
         prop > 0 ? static_cast<double>(draws.stats.thinning_accepted[t]) / prop : 0.0},
        {"lambda_star_inefficiency", inefficiency_or_null(lam)},
        {"K_inefficiency", inefficiency_or_null(k)}});
  }
  const auto& sec = draws.stats.seconds;
  Json summary{{"T", T},
               {"n_draws", draws.draws.size()},
               {"draws_file", draws_path.filename().string()},
               {"slices", slices},
               {"theta_acceptance",
                draws.stats.theta.proposed
                    ? Json(static_cast<double>(draws.stats.theta.accepted) /
                           static_cast<double>(draws.stats.theta.proposed))
                    : Json()},
               {"seconds_per_block",
                {{"thinned", sec.thinned}, {"latent", sec.latent},
                 {"lambda_star", sec.lambda_star}, {"theta", sec.theta}}}};
  write_json(run.out / "summary.json", summary);
  run.manifest("fit");
  return summary;
}

Json cmd_render(const Json& cfg) {
  Run run(cfg);
  auto& r = run.r;
  const auto draws = read_draws(fs::path(r.text("draws")));
  GridSpec grid{r.count("nx", 100), r.count("ny", 100), draws.domain};
  SurfaceOptions opts;
  opts.M = r.count("M", draws.M > 0 ? draws.M : 30);
  opts.integrate_variance = r.flag("integrate_variance", false);
  opts.stride = r.count("stride", 1);
  const bool ppm = r.flag("ppm", false);
  std::vector<std::size_t> slices;
  if (r.has("t")) {
    slices.push_back(slice_index(r.count("t"), draws.T(), "t"));
  } else {
    for (std::size_t t = 0; t < draws.T(); ++t) slices.push_back(t);
  }
  Json report = Json::array();
  for (std::size_t t : slices) {
    const auto field = posterior_intensity_grid(draws, t, grid, opts);
    if (field.prior_only)
      std::cerr << "warning: slice " << t + 1 << " has draws without reference points; "
                << "those draws contribute the prior-only surface\n";
    const std::string stem = "intensity_t" + std::to_string(t + 1);
    write_field_csv(run.out / (stem + ".csv"), field);
    Json entry{{"t", t + 1}, {"csv", stem + ".csv"}, {"prior_only", field.prior_only}};
    if (ppm) {
      const auto range = write_field_ppm(run.out / (stem + ".ppm"), field);
      Json side{{"t", t + 1}, {"nx", grid.nx}, {"ny", grid.ny}, {"min", range.min}, {"max", range.max}};
      write_json(run.out / (stem + ".json"), side);
      entry["ppm"] = stem + ".ppm";
    }
    report.push_back(entry);
  }
  run.manifest("render");
  return report;
}

Json cmd_predict(const Json& cfg) {
  Run run(cfg);
  auto& r = run.r;
  const std::uint64_t seed = r.seed();
  const auto draws = read_draws(fs::path(r.text("draws")));
  // The training horizon must be stated: prediction targets slice t + 1.
  const std::size_t t = slice_index(r.count("t"), draws.T(), "training horizon t");
  const GammaChainPrior prior = read_prior(r);
  if (prior.w == 1.0) throw ValidationError("w = 1 gives a degenerate Beta evolution");
  GridSpec grid{r.count("nx", 100), r.count("ny", 100), draws.domain};
  SurfaceOptions opts;
  opts.M = r.count("M", draws.M > 0 ? draws.M : 30);
  opts.stride = r.count("stride", 1);
  Rng rng(seed);
  const Prediction pred = predict_next_time(draws, t, prior, grid, rng, opts);
  const std::string stem = "predict_t" + std::to_string(t + 2);
  write_field_csv(run.out / (stem + ".csv"), pred.field);
  IntensityField zf{grid, pred.z_grid, t + 1, false};
  write_field_csv(run.out / ("zgrid_t" + std::to_string(t + 2) + ".csv"), zf);

  const double mp = mean(pred.lambda_pred);
  const double mf = mean(pred.lambda_fit);
  std::vector<double> diff(pred.lambda_pred.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pred.lambda_pred[i] - pred.lambda_fit[i];
  Json report{{"training_horizon", t + 1},
              {"predicted_slice", t + 2},
              {"lambda_pred_mean", mp},
              {"lambda_fit_mean", mf},
              {"lambda_pred_minus_fit_se",
               diff.size() > 1 ? std::sqrt(variance(diff) / static_cast<double>(diff.size())) : 0.0}};
  if (t + 1 < draws.T()) {
    const auto est = posterior_intensity_grid(draws, t + 1, grid, opts);
    report["max_abs_diff_vs_estimate"] = surface_max_abs_diff(pred.field, est);
  }
  write_json(run.out / "predict.json", report);
  run.manifest("predict");
  return report;
}

Json cmd_diag(const Json& cfg) {
  Run run(cfg);
  auto& r = run.r;
  Json report = Json::object();
  if (r.has("series")) {
    const auto s = read_series(fs::path(r.text("series")), r.text("column", ""));
    report["n"] = s.size();
    report["inefficiency_factor"] = inefficiency_factor(s);
    report["ess"] = effective_sample_size(s);
  } else {
    const auto draws = read_draws(fs::path(r.text("draws")));
    Json slices = Json::array();
    for (std::size_t t = 0; t < draws.T(); ++t)
      slices.push_back(Json{{"t", t + 1},
                            {"lambda_star_inefficiency", inefficiency_or_null(draws.lambda_series(t))},
                            {"K_inefficiency", inefficiency_or_null(draws.K_series(t))}});
    report["n"] = draws.draws.size();
    report["slices"] = slices;
  }
  write_json(run.out / "diag.json", report);
  run.manifest("diag");
  return report;
}

Json cmd_bench(const Json& cfg) {
  Run run(cfg);
  auto& r = run.r;
  BenchSettings bs;
  auto sizes = [&](const std::string& key, const std::vector<std::size_t>& def) {
    std::vector<double> d(def.begin(), def.end());
    std::vector<std::size_t> out;
    for (double v : r.numbers(key, d)) {
      if (!(v >= 1.0) || v != std::floor(v)) throw ValidationError(key + " must hold positive integers");
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  };
  bs.sizes = sizes("sizes", bs.sizes);
  bs.M = r.count("M", bs.M);
  bs.M_values = sizes("M_values", bs.M_values);
  bs.M_sweep_K = r.count("M_sweep_K", bs.M_sweep_K);
  bs.dense_sizes = sizes("dense_sizes", bs.dense_sizes);
  bs.density = r.number("density", bs.density);
  bs.repeats = r.count("repeats", bs.repeats);
  bs.seed = r.seed();
  if (bs.repeats < 1 || bs.M < 1 || !(bs.density > 0.0))
    throw ValidationError("bench needs repeats >= 1, M >= 1 and density > 0");
  const Json report = bench_to_json(run_bench(bs));
  write_json(run.out / "bench.json", report);
  run.manifest("bench");
  return report;
}

Json run_command(const std::string& name, const Json& cfg) {
  if (name == "simulate") return cmd_simulate(cfg);
  if (name == "fit") return cmd_fit(cfg);
  if (name == "render") return cmd_render(cfg);
  if (name == "predict") return cmd_predict(cfg);
  if (name == "diag") return cmd_diag(cfg);
  if (name == "bench") return cmd_bench(cfg);
  throw ValidationError("unknown command '" + name + "'");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const RunawayThinningError*>(&e)) return 4;
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 1;
}

}  // namespace exgcp::cli
