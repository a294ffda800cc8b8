#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "exdf/data.hpp"
#include "exdf/model.hpp"

namespace exdf {

enum class Generator { exdf, gaussian };

/// Synthetic study region: a square lattice of grid cells, each station
/// placed inside a distinct cell.
struct SyntheticScenario {
  Generator generator = Generator::exdf;
  int n_sites = 6;
  int n_cells = 16;
  int n_days = 365;
  int start_day = 17897; ///< 2019-01-01
  double extent_km = 2.0;
  /// Generating hierarchy; decay rates and basis dimension come from here.
  ModelSpec spec = default_spec();
  /// Fixed shapes; NaN draws them from the Laplace priors.
  double xi_y = std::numeric_limits<double>::quiet_NaN();
  double xi_x = std::numeric_limits<double>::quiet_NaN();
  double grid_exceed_prob = 0.2;
  double threshold_y = 20.0;
  double threshold_x = 20.0;
  double missing_fraction = 0.0;
  // Gaussian generator: raw levels and noise variances.
  double gauss_level = 30.0;
  double gauss_level_sd = 3.0;
  double gauss_sigma2_alpha = 1.0;
  double gauss_sigma2_beta = 0.01;
  double gauss_sigma2_c = 1.0;
  double gauss_sigma2_y = 4.0;
  double gauss_sigma2_x = 4.0;
  double gauss_quantile = 0.8;
  std::uint64_t seed = 1;

  /// Hierarchy used by default for synthetic studies: m = 10, log-scale
  /// prior mean log 5, informative variance priors.
  static ModelSpec default_spec();
  void validate() const;
};

struct SimulationResult {
  Dataset data; ///< raw series, thresholds not applied
  ThresholdTable thresholds;
  ParameterState truth;
  std::vector<std::int64_t> site_cells;
  /// Log-scale coefficients of every grid cell (collocated cells use d_i).
  std::vector<std::vector<double>> cell_d;
};

SimulationResult simulate(const SyntheticScenario& scenario);

struct SimulationFiles {
  std::filesystem::path stations;
  std::filesystem::path grid;
  std::filesystem::path thresholds;
  std::filesystem::path truth;
};

/// Writes stations.csv, grid.csv, thresholds.csv and truth.json into `dir`.
SimulationFiles write_simulation(const SimulationResult& sim, const SyntheticScenario& scenario,
                                 const std::filesystem::path& dir);

} // namespace exdf
