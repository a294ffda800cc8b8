#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "exdf/archive.hpp"
#include "exdf/config.hpp"
#include "exdf/diagnostics.hpp"
#include "exdf/error.hpp"
#include "exdf/gaussian.hpp"
#include "exdf/mcmc.hpp"
#include "exdf/numeric.hpp"
#include "exdf/posterior.hpp"
#include "exdf/predict.hpp"
#include "exdf/simulate.hpp"
#include "exdf/validation.hpp"
#include "exdf/variogram.hpp"

namespace fs = std::filesystem;
using namespace exdf;

namespace {

std::string fmt(double v) {
  if (std::isnan(v))
    return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path())
    fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out)
    throw InputError("cannot write " + p.string());
  return out;
}

fs::path manifest_path(const fs::path& output) {
  fs::path p = output;
  p += ".manifest.json";
  return p;
}

void record(const std::string& command, const RunConfig& config, const fs::path& output) {
  write_manifest(manifest_path(output), command, config, {{output, file_checksum(output)}});
}

/// Manifest for commands driven by an archive rather than a config.
void record_plain(const std::string& command, const std::vector<fs::path>& inputs,
                  const fs::path& output) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["versions"] = {{"exdf", kVersion}};
  nlohmann::ordered_json in = nlohmann::ordered_json::array();
  for (const auto& p : inputs)
    in.push_back({{"path", p.string()}, {"checksum", file_checksum(p)}});
  j["inputs"] = in;
  j["outputs"] = {{{"path", output.string()}, {"checksum", file_checksum(output)}}};
  auto out = open_out(manifest_path(output));
  out << j.dump(2) << '\n';
}

struct Prepared {
  Dataset data;
  std::vector<CollocatedPair> pairs;
};

Prepared prepare(RunConfig& config) {
  if (config.station_file.empty() || config.grid_file.empty())
    throw ConfigError("config must set station_file and grid_file");
  Prepared p;
  p.data = load_dataset(config.station_file, config.grid_file,
                        {config.coverage_min, config.quantile});
  for (const auto& id : p.data.dropped_stations)
    std::cerr << "note: station " << id << " dropped (coverage below " << config.coverage_min
              << ")\n";
  if (!config.threshold_file.empty())
    apply_fixed_thresholds(p.data, load_thresholds(config.threshold_file));
  else
    apply_quantile_thresholds(p.data, config.quantile);
  p.pairs = collocate(p.data.stations, p.data.grid);
  if (p.pairs.empty())
    throw InputError("no stations left after the coverage filter");
  if (config.prefit_decay) {
    auto fit = prefit_decay(p.pairs);
    for (const auto& w : fit.warnings)
      std::cerr << "warning: " << w << '\n';
    config.spec.phi_alpha = fit.phi_alpha;
    config.spec.phi_beta = fit.phi_beta;
    config.prefit_decay = false;
    std::cerr << "decay pre-fit: phi_alpha = " << fit.phi_alpha << ", phi_beta = " << fit.phi_beta
              << '\n';
  }
  return p;
}

PosteriorArchive fit_archive(const RunConfig& config, const Prepared& p) {
  if (config.model == ModelKind::gaussian)
    return fit_gaussian(prepare_gaussian_data(p.pairs, config.spec.m), config.spec, config.mcmc);
  auto progress = [&](int chain, long it) {
    if (it % 50000 == 0)
      std::cerr << "chain " << chain << ": iteration " << it << " of " << config.mcmc.n_iter
                << '\n';
  };
  return run_mcmc(prepare_fusion_data(p.pairs, config.spec.m), config.spec, config.mcmc,
                  progress);
}

RunConfig config_from(const std::string& config_path, const std::string& manifest) {
  if (!manifest.empty())
    return load_manifest_config(manifest);
  if (config_path.empty())
    throw ConfigError("--config is required");
  return load_config(config_path);
}

int cmd_fit(const std::string& config_path, const std::string& manifest, std::string out,
            const std::string& model) {
  RunConfig config = config_from(config_path, manifest);
  if (!model.empty())
    config.model = parse_model_kind(model);
  fs::path out_path = out.empty() ? config.output_dir / "posterior.bin" : fs::path(out);
  if (out_path.has_parent_path())
    fs::create_directories(out_path.parent_path());
  Prepared p = prepare(config);
  PosteriorArchive archive = fit_archive(config, p);
  for (const auto& w : archive.warnings)
    std::cerr << "warning: " << w << '\n';
  if (archive.n_chains() >= 2)
    for (const auto& g : group_rhat(archive))
      std::cerr << "R-hat " << g.group << ": " << g.max_rhat << '\n';
  write_archive(archive, out_path);
  record("fit", config, out_path);
  std::cout << out_path.string() << '\n';
  return 0;
}

int cmd_predict(const std::string& config_path, const std::string& posterior,
                const std::string& grid_file, const std::string& stat, const std::string& at,
                const std::string& out) {
  RunConfig config = load_config(config_path);
  if (!grid_file.empty())
    config.grid_file = grid_file;
  Prepared p = prepare(config);
  PosteriorArchive archive = read_archive(posterior);
  PredictOptions po;
  po.max_draws = config.max_draws;
  po.seed = config.mcmc.seed;
  fs::path out_path = out;
  if (!at.empty()) {
    auto comma = at.find(',');
    if (comma == std::string::npos)
      throw ConfigError("--at expects EASTING,NORTHING in km");
    Location loc{std::stod(at.substr(0, comma)), std::stod(at.substr(comma + 1))};
    const auto& cell = p.data.grid[nearest_centroid_index(loc, p.data.grid)];
    std::vector<int> days;
    for (int t : cell.timestamps)
      if (t >= archive.domain.t_min && t <= archive.domain.t_max)
        days.push_back(t);
    auto pred = predict(archive, loc, days, p.data.grid, po);
    auto mean = pred.mean();
    auto lo = pred.quantile(0.025);
    auto hi = pred.quantile(0.975);
    auto prob = pred.mean_exceed_prob();
    auto o = open_out(out_path);
    o << "date,mean,lower,upper,exceed_prob\n";
    for (std::size_t t = 0; t < days.size(); ++t)
      o << format_iso_date(days[t]) << ',' << fmt(mean[t]) << ',' << fmt(lo[t]) << ','
        << fmt(hi[t]) << ',' << fmt(prob[t]) << '\n';
  } else {
    auto rows = shortfall_surface(archive, p.data.grid, parse_surface_statistic(stat), po);
    if (out_path.has_parent_path())
      fs::create_directories(out_path.parent_path());
    write_surface_csv(rows, out_path);
  }
  record("predict", config, out_path);
  return 0;
}

int cmd_validate(const std::string& config_path, bool loso, const std::string& model,
                 const std::string& out) {
  if (!loso)
    throw ConfigError("validate needs --loso");
  RunConfig config = load_config(config_path);
  if (!model.empty())
    config.model = parse_model_kind(model);
  Prepared p = prepare(config);
  LosoOptions o;
  o.model = config.model;
  o.settings = config.mcmc;
  o.predict.max_draws = config.max_draws;
  o.predict.seed = config.mcmc.seed;
  o.rhat_max = config.rhat_max;
  o.cutoff = config.cutoff;
  auto rows = loso_cv(p.pairs, p.data.grid, config.spec, o);
  fs::path out_path = out.empty() ? config.output_dir / "metrics.csv" : fs::path(out);
  if (out_path.has_parent_path())
    fs::create_directories(out_path.parent_path());
  write_metrics_csv(rows, out_path);
  record("validate", config, out_path);
  return 0;
}

int cmd_simulate(const SyntheticScenario& sc, const std::string& out) {
  fs::path dir = out;
  auto sim = simulate(sc);
  auto files = write_simulation(sim, sc, dir);
  RunConfig config;
  config.station_file = fs::absolute(files.stations);
  config.grid_file = fs::absolute(files.grid);
  config.threshold_file = fs::absolute(files.thresholds);
  config.output_dir = fs::absolute(dir);
  config.spec = sc.spec;
  config.mcmc.seed = sc.seed;
  if (sc.generator == Generator::gaussian) {
    config.threshold_file.clear();
    config.quantile = sc.gauss_quantile;
  }
  {
    auto o = open_out(dir / "config.toml");
    o << "# synthetic scenario, seed " << sc.seed << '\n' << canonical_config(config);
  }
  write_manifest(manifest_path(dir / "truth.json"), "simulate", config,
                 {{files.stations, file_checksum(files.stations)},
                  {files.grid, file_checksum(files.grid)},
                  {files.thresholds, file_checksum(files.thresholds)},
                  {files.truth, file_checksum(files.truth)}});
  std::cout << (dir / "config.toml").string() << '\n';
  return 0;
}

int cmd_diagnose(const std::string& posterior, bool variogram, const std::string& config_path,
                 const std::string& traces, const std::string& out) {
  if (variogram) {
    RunConfig config = load_config(config_path);
    config.prefit_decay = false;
    Prepared p = prepare(config);
    auto fit = prefit_decay(p.pairs);
    for (const auto& w : fit.warnings)
      std::cerr << "warning: " << w << '\n';
    fs::path out_path = out.empty() ? config.output_dir / "variogram.csv" : fs::path(out);
    auto o = open_out(out_path);
    o << "field,kind,distance,semivariance,pair_count\n";
    for (int f = 0; f < 2; ++f) {
      const auto& bins = f == 0 ? fit.alpha_bins : fit.beta_bins;
      const auto& curve = f == 0 ? fit.alpha_fit : fit.beta_fit;
      const char* name = f == 0 ? "alpha" : "beta";
      double hmax = 0.0;
      for (const auto& b : bins) {
        o << name << ",bin," << fmt(b.mean_distance) << ',' << fmt(b.semivariance) << ','
          << b.pair_count << '\n';
        hmax = std::max(hmax, b.mean_distance);
      }
      for (int k = 0; k <= 50; ++k) {
        double h = hmax * k / 50.0;
        o << name << ",fit," << fmt(h) << ',' << fmt(curve.evaluate(h)) << ",\n";
      }
    }
    o.close();
    std::cerr << "phi_alpha = " << fit.phi_alpha << ", phi_beta = " << fit.phi_beta << '\n';
    record("diagnose --variogram", config, out_path);
    return 0;
  }
  if (posterior.empty())
    throw ConfigError("diagnose needs a posterior archive or --variogram");
  PosteriorArchive archive = read_archive(posterior);
  std::ostringstream table;
  table << "group,max_rhat,worst,degenerate\n";
  if (archive.n_chains() >= 2) {
    for (const auto& g : group_rhat(archive))
      table << g.group << ',' << fmt(g.max_rhat) << ',' << g.worst << ',' << g.degenerate << '\n';
  } else {
    std::cerr << "note: R-hat needs at least two chains\n";
  }
  for (std::size_t c = 0; c < archive.blocks.size(); ++c)
    for (const auto& b : archive.blocks[c])
      std::cerr << "chain " << c << " block " << b.name << ": acceptance " << b.acceptance_rate
                << '\n';
  if (out.empty()) {
    std::cout << table.str();
  } else {
    auto o = open_out(out);
    o << table.str();
    o.close();
    record_plain("diagnose", {posterior}, out);
  }
  if (!traces.empty()) {
    fs::create_directories(traces);
    for (const auto& g : archive.layout.groups) {
      fs::path tp = fs::path(traces) / ("trace_" + g.name + ".csv");
      auto o = open_out(tp);
      o << "chain,draw";
      for (std::size_t k = g.offset; k < g.offset + g.size; ++k)
        o << ',' << archive.layout.element_name(k);
      o << '\n';
      for (std::size_t c = 0; c < archive.n_chains(); ++c)
        for (Eigen::Index d = 0; d < archive.chains[c].rows(); ++d) {
          o << c << ',' << d;
          for (std::size_t k = g.offset; k < g.offset + g.size; ++k)
            o << ',' << fmt(archive.chains[c](d, static_cast<Eigen::Index>(k)));
          o << '\n';
        }
    }
  }
  return 0;
}

int cmd_threshold(const std::string& config_path, double quantile, int mrl_points,
                  const std::string& out) {
  RunConfig config = load_config(config_path);
  if (!std::isnan(quantile))
    config.quantile = quantile;
  config.validate();
  Dataset data = load_dataset(config.station_file, config.grid_file,
                              {config.coverage_min, config.quantile});
  fs::path out_path = out.empty() ? config.output_dir / "mrl.csv" : fs::path(out);
  auto o = open_out(out_path);
  o << "site,quantile_threshold,candidate,mean_excess,count,lower,upper\n";
  for (const auto& s : data.stations) {
    double u = compute_threshold(s.values, config.quantile, s.id);
    auto grid = mrl_grid(s.values, mrl_points);
    for (const auto& r : mean_residual_life(s.values, grid))
      o << s.id << ',' << fmt(u) << ',' << fmt(r.threshold) << ',' << fmt(r.mean_excess) << ','
        << r.count << ',' << fmt(r.lower) << ',' << fmt(r.upper) << '\n';
  }
  o.close();
  record("threshold", config, out_path);
  return 0;
}

int cmd_export(const std::string& posterior, const std::string& format, const std::string& out) {
  if (format != "csv")
    throw ConfigError("unsupported export format '" + format + "'");
  PosteriorArchive archive = read_archive(posterior);
  auto o = open_out(out);
  o << "chain,draw";
  for (std::size_t k = 0; k < archive.layout.size(); ++k)
    o << ',' << archive.layout.element_name(k);
  o << '\n';
  for (std::size_t c = 0; c < archive.n_chains(); ++c)
    for (Eigen::Index d = 0; d < archive.chains[c].rows(); ++d) {
      o << c << ',' << d;
      for (Eigen::Index k = 0; k < archive.chains[c].cols(); ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", archive.chains[c](d, k));
        o << ',' << buf;
      }
      o << '\n';
    }
  o.close();
  record_plain("export", {posterior}, out);
  return 0;
}

int cmd_qq(const std::string& config_path, const std::string& posterior, const std::string& site,
           const std::string& out) {
  RunConfig config = load_config(config_path);
  Prepared p = prepare(config);
  PosteriorArchive archive = read_archive(posterior);
  const CollocatedPair* pair = nullptr;
  for (const auto& c : p.pairs)
    if (c.station.id == site)
      pair = &c;
  if (!pair)
    throw InputError("unknown site '" + site + "'");
  std::vector<int> days;
  std::vector<double> obs;
  for (std::size_t j = 0; j < pair->station.timestamps.size(); ++j)
    if (!is_missing(pair->station.censored[j])) {
      days.push_back(pair->station.timestamps[j]);
      obs.push_back(pair->station.censored[j]);
    }
  PredictOptions po;
  po.max_draws = config.max_draws;
  po.seed = config.mcmc.seed;
  po.threshold = pair->station.threshold;
  auto pred = predict(archive, pair->station.location, days, p.data.grid, po);
  auto rows = qq_table(pred, obs);
  fs::path out_path = out;
  if (out_path.has_parent_path())
    fs::create_directories(out_path.parent_path());
  write_qq_csv(rows, out_path);
  record("qq", config, out_path);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"ExDF: Bayesian data fusion for censored threshold exceedances"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, manifest, out, model, posterior, grid_file, stat = "shortfall", at,
                                                                      site, traces, format = "csv";
  bool loso = false, variogram = false;
  double quantile = std::nan("");
  int mrl_points = 20;
  SyntheticScenario sc;
  std::string generator = "exdf";

  auto* fit = app.add_subcommand("fit", "Sample the posterior and write an archive");
  fit->add_option("--config", config_path, "Run configuration");
  fit->add_option("--manifest", manifest, "Re-run from a manifest written by an earlier fit");
  fit->add_option("--out", out, "Archive path (default output_dir/posterior.bin)");
  fit->add_option("--model", model, "exdf or gaussian");

  auto* pred = app.add_subcommand("predict", "Shortfall or range surface over grid cells");
  pred->add_option("--config", config_path)->required();
  pred->add_option("--posterior", posterior, "Posterior archive")->required();
  pred->add_option("--grid", grid_file, "Grid CSV (default: config grid_file)");
  pred->add_option("--stat", stat, "shortfall or range");
  pred->add_option("--at", at, "Predict one location EASTING,NORTHING instead of a surface");
  pred->add_option("--out", out)->required();

  auto* val = app.add_subcommand("validate", "Leave-one-site-out cross-validation");
  val->add_option("--config", config_path)->required();
  val->add_flag("--loso", loso, "Leave-one-site-out");
  val->add_option("--model", model, "exdf or gaussian");
  val->add_option("--out", out, "Metrics CSV (default output_dir/metrics.csv)");

  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset");
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--seed", sc.seed);
  sim->add_option("--n-sites", sc.n_sites);
  sim->add_option("--n-cells", sc.n_cells);
  sim->add_option("--days", sc.n_days);
  sim->add_option("--m", sc.spec.m);
  sim->add_option("--xi-y", sc.xi_y, "Fixed station shape (default: prior draw)");
  sim->add_option("--xi-x", sc.xi_x, "Fixed grid shape (default: prior draw)");
  sim->add_option("--missing", sc.missing_fraction, "Fraction of station days removed");
  sim->add_option("--generator", generator, "exdf or gaussian");

  auto* diag = app.add_subcommand("diagnose", "R-hat per parameter group, traces, variogram");
  diag->add_option("posterior", posterior, "Posterior archive");
  diag->add_flag("--variogram", variogram, "Variogram pre-fit table instead (needs --config)");
  diag->add_option("--config", config_path);
  diag->add_option("--traces", traces, "Directory for trace CSVs");
  diag->add_option("--out", out);

  auto* thr = app.add_subcommand("threshold", "Mean residual life table per station");
  thr->add_option("--config", config_path)->required();
  thr->add_option("--quantile", quantile);
  thr->add_option("--mrl-grid", mrl_points, "Number of candidate thresholds");
  thr->add_option("--out", out);

  auto* exp = app.add_subcommand("export", "Flatten archive draws");
  exp->add_option("posterior", posterior)->required();
  exp->add_option("--format", format);
  exp->add_option("--out", out)->required();

  auto* qq = app.add_subcommand("qq", "Q-Q table of one fitted station");
  qq->add_option("--config", config_path)->required();
  qq->add_option("--posterior", posterior)->required();
  qq->add_option("--site", site)->required();
  qq->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit)
      return cmd_fit(config_path, manifest, out, model);
    if (*pred)
      return cmd_predict(config_path, posterior, grid_file, stat, at, out);
    if (*val)
      return cmd_validate(config_path, loso, model, out);
    if (*sim) {
      if (generator == "gaussian")
        sc.generator = Generator::gaussian;
      else if (generator != "exdf")
        throw ConfigError("unknown generator '" + generator + "'");
      return cmd_simulate(sc, out);
    }
    if (*diag)
      return cmd_diagnose(posterior, variogram, config_path, traces, out);
    if (*thr)
      return cmd_threshold(config_path, quantile, mrl_points, out);
    if (*exp)
      return cmd_export(posterior, format, out);
    if (*qq)
      return cmd_qq(config_path, posterior, site, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
