// exgcp command-line entry point.
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/commands.hpp"

namespace {

using exgcp::cli::Json;

struct Opt {
  const char* flag;
  const char* key;
  const char* help;
  bool is_switch = false;
};

const std::vector<Opt> kCommon = {
    {"--out", "out", "output directory"},
    {"--seed", "seed", "64-bit seed"},
    {"--threads", "threads", "worker threads (outputs do not depend on it)"},
};

const std::map<std::string, std::string> kDescriptions = {
    {"simulate", "draw a synthetic event set with its latent truth"},
    {"fit", "run the MCMC sampler on an event set"},
    {"render", "posterior-mean intensity surfaces on a grid"},
    {"predict", "one-step-ahead intensity forecast"},
    {"diag", "inefficiency factor and effective sample size"},
    {"bench", "latent-block timing versus K and M"},
};

const std::map<std::string, std::vector<Opt>> kOptions = {
    {"simulate",
     {{"--domain", "domain", "x_min,x_max,y_min,y_max"},
      {"--lambda", "lambda", "lambda* per slice, comma separated (one value = spatial)"},
      {"--sigma2-1", "sigma2_1", "first-slice variance"},
      {"--phi-1", "phi_1", "first-slice decay"},
      {"--sigma2", "sigma2", "innovation variance"},
      {"--phi", "phi", "innovation decay"},
      {"--dense-limit", "dense_limit", "largest point count drawn with the dense GP"},
      {"--sim-M", "sim_M", "neighbors for larger latent draws"}}},
    {"fit",
     {{"--events", "events", "event CSV with t,x,y columns"},
      {"--T", "T", "number of time slices"},
      {"--domain", "domain", "x_min,x_max,y_min,y_max"},
      {"--source-domain", "source_domain", "raw coordinate rectangle to project from"},
      {"--col-t", "col_t", "time column name"},
      {"--col-x", "col_x", "x column name"},
      {"--col-y", "col_y", "y column name"},
      {"--M", "M", "neighbor budget"},
      {"--n-iter", "n_iter", "iterations"},
      {"--burn-in", "burn_in", "discarded iterations"},
      {"--a0", "a0", "Gamma prior shape"},
      {"--b0", "b0", "Gamma prior rate"},
      {"--w", "w", "discount factor in [0,1)"},
      {"--sigma2-1", "sigma2_1", "first-slice variance"},
      {"--phi-1", "phi_1", "first-slice decay"},
      {"--sigma2", "sigma2", "innovation variance"},
      {"--phi", "phi", "innovation decay"},
      {"--fixed-lambda", "fixed_lambda", "hold lambda* at these values"},
      {"--mode", "mode", "nngp or dense"},
      {"--thinning", "thinning", "birth_death, poisson or fixed_count"},
      {"--bd-moves", "bd_moves", "birth-death proposals per iteration per unit of lambda*|D|"},
      {"--latent", "latent", "gibbs or sequential"},
      {"--theta-sd", "theta_sd", "random-walk scale for theta"},
      {"--max-proposals", "max_proposals", "thinning proposal cap"},
      {"--draws-format", "draws_format", "binary or csv"},
      {"--sample-theta", "sample_theta", "update covariance parameters", true},
      {"--allow-empty", "allow_empty", "fit an empty event set", true},
      {"--observed-only", "store_thinned", "store only observed points in draws", true},
      {"--progress", "quiet", "print progress", true}}},
    {"render",
     {{"--draws", "draws", "draws file"},
      {"--t", "t", "slice to render (default all)"},
      {"--nx", "nx", "grid columns"},
      {"--ny", "ny", "grid rows"},
      {"--M", "M", "kriging neighbors"},
      {"--stride", "stride", "use every k-th draw"},
      {"--ppm", "ppm", "also write PPM heatmaps", true},
      {"--integrate-variance", "integrate_variance", "average Phi(mu/sqrt(1+var))", true}}},
    {"predict",
     {{"--draws", "draws", "draws file"},
      {"--t", "t", "training horizon; predicts slice t+1"},
      {"--a0", "a0", "Gamma prior shape"},
      {"--b0", "b0", "Gamma prior rate"},
      {"--w", "w", "discount factor"},
      {"--nx", "nx", "grid columns"},
      {"--ny", "ny", "grid rows"},
      {"--M", "M", "kriging neighbors"},
      {"--stride", "stride", "use every k-th draw"}}},
    {"diag",
     {{"--draws", "draws", "draws file"},
      {"--series", "series", "CSV with one numeric series"},
      {"--column", "column", "series column name"}}},
    {"bench",
     {{"--sizes", "sizes", "NNGP sizes"},
      {"--M", "M", "NNGP neighbor budget"},
      {"--M-values", "M_values", "neighbor budgets for the sweep"},
      {"--M-sweep-K", "M_sweep_K", "size used for the sweep"},
      {"--dense-sizes", "dense_sizes", "dense sizes"},
      {"--density", "density", "points per unit area"},
      {"--repeats", "repeats", "repeats per measurement"}}},
};

const std::set<std::string> kTextKeys = {"out",  "events", "draws",    "series", "column",
                                         "mode", "thinning", "latent", "draws_format",
                                         "col_t", "col_x",   "col_y"};

// Values are parsed as JSON where possible; bare comma lists become arrays.
Json parse_value(const std::string& key, const std::string& s) {
  if (kTextKeys.count(key)) return s;
  try {
    return Json::parse(s);
  } catch (const Json::parse_error&) {
  }
  if (s.find(',') != std::string::npos) {
    try {
      return Json::parse("[" + s + "]");
    } catch (const Json::parse_error&) {
    }
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Gaussian Cox process inference with nearest-neighbor GPs"};
  app.set_version_flag("--version", exgcp::cli::version());
  app.require_subcommand(1);

  std::map<std::string, std::string> config_files;
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, bool>> switches;
  std::map<std::string, CLI::App*> subs;

  for (const auto& [name, opts] : kOptions) {
    CLI::App* sub = app.add_subcommand(name, kDescriptions.at(name));
    subs[name] = sub;
    sub->add_option("--config", config_files[name], "JSON config or manifest; flags override it");
    std::vector<Opt> all = kCommon;
    all.insert(all.end(), opts.begin(), opts.end());
    for (const auto& o : all) {
      if (o.is_switch)
        sub->add_flag(o.flag, switches[name][o.key], o.help);
      else
        sub->add_option(o.flag, values[name][o.key], o.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      Json cfg = config_files[name].empty() ? Json::object()
                                            : exgcp::cli::config_from_file(config_files[name]);
      Json flags = Json::object();
      std::vector<Opt> all = kCommon;
      all.insert(all.end(), kOptions.at(name).begin(), kOptions.at(name).end());
      for (const auto& o : all) {
        if (sub->count(o.flag) == 0) continue;
        if (!o.is_switch) {
          flags[o.key] = parse_value(o.key, values[name][o.key]);
        } else if (std::string(o.key) == "store_thinned" || std::string(o.key) == "quiet") {
          flags[o.key] = false;  // negative switches
        } else {
          flags[o.key] = true;
        }
      }
      cfg = exgcp::cli::merge(cfg, flags);
      const Json report = exgcp::cli::run_command(name, cfg);
      std::cout << report.dump(2) << '\n';
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return exgcp::cli::exit_code_for(e);
    }
  }
  return 2;
}
