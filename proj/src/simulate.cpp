#include "exdf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "exdf/basis.hpp"
#include "exdf/error.hpp"
#include "exdf/extremes.hpp"
#include "exdf/numeric.hpp"
#include "exdf/rng.hpp"
#include "exdf/spatial.hpp"

namespace exdf {

namespace {

enum Stream : std::uint64_t { kLayout = 1, kHyper = 2, kCells = 100, kStations = 100000 };

double inverse_gamma_draw(const GammaPrior& prior, Rng& rng) {
  return 1.0 / std::gamma_distribution<double>(prior.shape, 1.0 / prior.rate)(rng);
}

Eigen::MatrixXd gp_columns(const Eigen::MatrixXd& dist, double decay, double variance,
                           double mean, int cols, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(exp_covariance(dist, decay, variance));
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd out(dist.rows(), cols);
  for (int r = 0; r < cols; ++r) {
    Eigen::VectorXd z(dist.rows());
    for (Eigen::Index k = 0; k < z.size(); ++k)
      z(k) = standard_normal(rng);
    out.col(r) = (L * z).array() + mean;
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

ModelSpec SyntheticScenario::default_spec() {
  ModelSpec s;
  s.m = 10;
  s.mu_d = {std::log(5.0)};
  s.kappa_d = 0.1;
  s.precision_alpha = {10.0, 2.0};
  s.precision_beta = {10.0, 2.0};
  s.precision_c = {10.0, 2.0};
  s.mu_lambda = {-2.0, 1.0, 2.0, 1.0};
  s.sigma2_lambda = {0.25, 0.25, 0.25, 0.25};
  return s;
}

void SyntheticScenario::validate() const {
  spec.validate();
  if (n_sites < 1 || n_cells < n_sites)
    throw ConfigError("scenario needs 1 <= n_sites <= n_cells");
  if (n_days < spec.m)
    throw ConfigError("scenario needs at least m days");
  if (!(extent_km > 0.0))
    throw ConfigError("extent_km must be positive");
  if (!(grid_exceed_prob >= 0.0 && grid_exceed_prob <= 1.0))
    throw ConfigError("grid_exceed_prob must lie in [0, 1]");
  if (!(threshold_y > 0.0 && threshold_x > 0.0))
    throw ConfigError("synthetic thresholds must be positive");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
    throw ConfigError("missing_fraction must lie in [0, 1)");
  for (double xi : {xi_y, xi_x})
    if (!std::isnan(xi) && !(std::abs(xi) < 0.5))
      throw ConfigError("fixed shapes must lie in (-0.5, 0.5)");
}

SimulationResult simulate(const SyntheticScenario& sc) {
  sc.validate();
  const ModelSpec& spec = sc.spec;
  const int n = sc.n_sites;
  const int m = spec.m;
  const bool gaussian = sc.generator == Generator::gaussian;
  SimulationResult out;

  // Lattice of cells and station placement.
  Rng layout = make_rng(sc.seed, kLayout);
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(sc.n_cells))));
  const double h = sc.extent_km / side;
  std::vector<int> days(static_cast<std::size_t>(sc.n_days));
  std::iota(days.begin(), days.end(), sc.start_day);
  for (int k = 0; k < sc.n_cells; ++k) {
    GridSeries g;
    g.cell_id = k + 1;
    g.centroid = {(k % side + 0.5) * h, (k / side + 0.5) * h};
    g.timestamps = days;
    out.data.grid.push_back(std::move(g));
  }
  std::vector<int> order(static_cast<std::size_t>(sc.n_cells));
  std::iota(order.begin(), order.end(), 0);
  for (int k = sc.n_cells - 1; k > 0; --k) {
    int j = static_cast<int>(uniform01(layout) * (k + 1));
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(std::min(j, k))]);
  }
  std::vector<Location> locs;
  for (int i = 0; i < n; ++i) {
    const auto& cell = out.data.grid[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    Location loc{cell.centroid.easting_km + (uniform01(layout) - 0.5) * 0.6 * h,
                 cell.centroid.northing_km + (uniform01(layout) - 0.5) * 0.6 * h};
    locs.push_back(loc);
    out.site_cells.push_back(cell.cell_id);
    StationSeries s;
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", i + 1);
    s.id = id;
    s.location = loc;
    s.timestamps = days;
    out.data.stations.push_back(std::move(s));
  }
  out.data.first_day = days.front();
  out.data.last_day = days.back();

  // Parameters.
  Rng hyper = make_rng(sc.seed, kHyper);
  ParameterState& t = out.truth;
  t = ParameterState::zeros(n, m);
  const Eigen::MatrixXd dist = distance_matrix(locs);
  if (gaussian) {
    t.sigma2_alpha = sc.gauss_sigma2_alpha;
    t.sigma2_beta = sc.gauss_sigma2_beta;
    t.sigma2_c = sc.gauss_sigma2_c;
  } else {
    t.sigma2_alpha = inverse_gamma_draw(spec.precision_alpha, hyper);
    t.sigma2_beta = inverse_gamma_draw(spec.precision_beta, hyper);
    t.sigma2_c = inverse_gamma_draw(spec.precision_c, hyper);
    t.xi_y = std::isnan(sc.xi_y) ? laplace_sample(spec.shape_prior_y, hyper) : sc.xi_y;
    t.xi_x = std::isnan(sc.xi_x) ? laplace_sample(spec.shape_prior_x, hyper) : sc.xi_x;
  }
  t.alpha = gp_columns(dist, spec.phi_alpha, t.sigma2_alpha, 0.0, m, hyper);
  t.beta = gp_columns(dist, spec.phi_beta, t.sigma2_beta, 1.0, m, hyper);
  const Eigen::VectorXd mu_d = spec.d_prior_mean();
  for (int k = 0; k < sc.n_cells; ++k) {
    std::vector<double> d(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r)
      d[static_cast<std::size_t>(r)] =
          gaussian ? sc.gauss_level + sc.gauss_level_sd * standard_normal(hyper)
                   : mu_d(r) + std::sqrt(spec.kappa_d) * standard_normal(hyper);
    out.cell_d.push_back(std::move(d));
  }
  for (int i = 0; i < n; ++i) {
    const auto& d = out.cell_d[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    for (int r = 0; r < m; ++r) {
      t.d(i, r) = d[static_cast<std::size_t>(r)];
      t.c(i, r) = t.alpha(i, r) + t.beta(i, r) * t.d(i, r) +
                  std::sqrt(t.sigma2_c) * standard_normal(hyper);
    }
    if (!gaussian)
      for (std::size_t l = 0; l < 4; ++l)
        t.lambda(i, static_cast<Eigen::Index>(l)) =
            spec.mu_lambda[l] + std::sqrt(spec.sigma2_lambda[l]) * standard_normal(hyper);
  }

  // Series.
  CubicBSplineBasis basis(m, {static_cast<double>(days.front()), static_cast<double>(days.back())});
  const BasisMatrix B = basis.matrix(days);
  for (int k = 0; k < sc.n_cells; ++k) {
    auto& g = out.data.grid[static_cast<std::size_t>(k)];
    Rng rng = make_rng(sc.seed, kCells + static_cast<std::uint64_t>(k));
    Eigen::VectorXd coef =
        Eigen::Map<const Eigen::VectorXd>(out.cell_d[static_cast<std::size_t>(k)].data(), m);
    Eigen::VectorXd curve = B * coef;
    g.values.resize(days.size());
    for (std::size_t j = 0; j < days.size(); ++j) {
      auto jj = static_cast<Eigen::Index>(j);
      if (gaussian) {
        g.values[j] = curve(jj) + std::sqrt(sc.gauss_sigma2_x) * standard_normal(rng);
      } else {
        DeltaGpdParams p{{std::exp(curve(jj)), t.xi_x}, sc.grid_exceed_prob};
        double z = dgpd_sample(p, rng);
        g.values[j] = z > 0.0 ? sc.threshold_x + z : sc.threshold_x * uniform01(rng);
      }
    }
    g.threshold = gaussian ? quantile(g.values, sc.gauss_quantile) : sc.threshold_x;
    out.thresholds.cell.emplace_back(g.cell_id, g.threshold);
  }
  for (int i = 0; i < n; ++i) {
    auto& s = out.data.stations[static_cast<std::size_t>(i)];
    Rng rng = make_rng(sc.seed, kStations + static_cast<std::uint64_t>(i));
    Eigen::VectorXd curve = B * t.c.row(i).transpose();
    s.values.resize(days.size());
    if (gaussian) {
      for (std::size_t j = 0; j < days.size(); ++j)
        s.values[j] = curve(static_cast<Eigen::Index>(j)) +
                      std::sqrt(sc.gauss_sigma2_y) * standard_normal(rng);
      s.threshold = quantile(s.values, sc.gauss_quantile);
    } else {
      GridSeries cell = out.data.grid[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      apply_threshold(cell, cell.threshold);
      Eigen::MatrixXd W = build_indicator_matrix(days, cell);
      Eigen::VectorXd logit_p = W * t.lambda.row(i).transpose();
      for (std::size_t j = 0; j < days.size(); ++j) {
        auto jj = static_cast<Eigen::Index>(j);
        DeltaGpdParams p{{std::exp(curve(jj)), t.xi_y}, logistic(logit_p(jj))};
        double z = dgpd_sample(p, rng);
        s.values[j] = z > 0.0 ? sc.threshold_y + z : sc.threshold_y * uniform01(rng);
      }
      s.threshold = sc.threshold_y;
    }
    for (auto& v : s.values)
      if (sc.missing_fraction > 0.0 && uniform01(rng) < sc.missing_fraction)
        v = std::numeric_limits<double>::quiet_NaN();
    out.thresholds.station.emplace_back(s.id, s.threshold);
  }
  return out;
}

SimulationFiles write_simulation(const SimulationResult& sim, const SyntheticScenario& sc,
                                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SimulationFiles files{dir / "stations.csv", dir / "grid.csv", dir / "thresholds.csv",
                        dir / "truth.json"};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out)
      throw InputError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(files.stations);
    out << "id,easting_km,northing_km\n";
    for (const auto& s : sim.data.stations)
      out << s.id << ',' << fmt(s.location.easting_km) << ',' << fmt(s.location.northing_km)
          << '\n';
    out << "id,date,value\n";
    for (const auto& s : sim.data.stations)
      for (std::size_t j = 0; j < s.timestamps.size(); ++j)
        out << s.id << ',' << format_iso_date(s.timestamps[j]) << ','
            << (std::isnan(s.values[j]) ? std::string() : fmt(s.values[j])) << '\n';
  }
  {
    auto out = open(files.grid);
    out << "cell_id,easting_km,northing_km,date,value\n";
    for (const auto& g : sim.data.grid)
      for (std::size_t k = 0; k < g.timestamps.size(); ++k)
        out << g.cell_id << ',' << fmt(g.centroid.easting_km) << ','
            << fmt(g.centroid.northing_km) << ',' << format_iso_date(g.timestamps[k]) << ','
            << fmt(g.values[k]) << '\n';
  }
  {
    auto out = open(files.thresholds);
    out << "kind,id,threshold\n";
    for (const auto& [id, u] : sim.thresholds.station)
      out << "station," << id << ',' << fmt(u) << '\n';
    for (const auto& [id, u] : sim.thresholds.cell)
      out << "cell," << id << ',' << fmt(u) << '\n';
  }
  {
    nlohmann::ordered_json j;
    j["seed"] = sc.seed;
    j["generator"] = sc.generator == Generator::exdf ? "exdf" : "gaussian";
    j["n_sites"] = sc.n_sites;
    j["n_cells"] = sc.n_cells;
    j["n_days"] = sc.n_days;
    j["m"] = sc.spec.m;
    j["phi_alpha"] = sc.spec.phi_alpha;
    j["phi_beta"] = sc.spec.phi_beta;
    nlohmann::ordered_json sites = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < sim.data.stations.size(); ++i)
      sites.push_back({{"id", sim.data.stations[i].id}, {"cell_id", sim.site_cells[i]}});
    j["sites"] = sites;
    auto layout = ParameterLayout::exdf(sc.n_sites, sc.spec.m);
    Eigen::VectorXd v = flatten(sim.truth);
    nlohmann::ordered_json params;
    for (std::size_t k = 0; k < layout.size(); ++k)
      params[layout.element_name(k)] = v(static_cast<Eigen::Index>(k));
    j["parameters"] = params;
    j["cell_d"] = sim.cell_d;
    auto out = open(files.truth);
    out << j.dump(2) << '\n';
  }
  return files;
}

} // namespace exdf
