#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace exdf {

/// Projected position in km. Lon/lat inputs are projected on load.
struct Location {
  double easting_km = 0.0;
  double northing_km = 0.0;
};

double distance_km(const Location& a, const Location& b);

/// One in situ site. Day indices count days since 1970-01-01; missing
/// values are NaN and stay NaN in `censored`.
struct StationSeries {
  std::string id;
  Location location;
  std::vector<int> timestamps;
  std::vector<double> values;
  double threshold = 0.0;
  std::vector<double> censored;

  std::size_t present_count() const;
};

/// One remote-sensing grid cell (dense, no missing values).
struct GridSeries {
  std::int64_t cell_id = 0;
  Location centroid;
  std::vector<int> timestamps;
  std::vector<double> values;
  double threshold = 0.0;
  std::vector<double> censored;
  std::vector<std::uint8_t> exceed_indicator;

  /// Index of day `t`, or -1 when the cell has no value that day.
  std::ptrdiff_t index_of(int t) const;
};

/// A station with the grid cell whose centroid is nearest, plus the
/// logistic covariate matrix (rows follow station timestamps).
struct CollocatedPair {
  StationSeries station;
  GridSeries grid;
  Eigen::MatrixXd W;
};

struct DataConfig {
  double coverage_min = 0.75;
  double quantile = 0.80;
};

struct Dataset {
  std::vector<StationSeries> stations;
  std::vector<GridSeries> grid;
  int first_day = 0; ///< study period, from the grid file
  int last_day = 0;
  std::vector<std::string> dropped_stations;
};

/// Parses the station and grid CSV files and drops stations whose fraction
/// of observed days in the study period is below `config.coverage_min`.
/// Thresholds are not applied here; see apply_quantile_thresholds.
Dataset load_dataset(const std::filesystem::path& station_file,
                     const std::filesystem::path& grid_file, const DataConfig& config);

/// Fixed thresholds keyed by series id, as written by `exdf simulate`:
/// CSV `kind,id,threshold` with kind `station` or `cell`.
struct ThresholdTable {
  std::vector<std::pair<std::string, double>> station;
  std::vector<std::pair<std::int64_t, double>> cell;
};
ThresholdTable load_thresholds(const std::filesystem::path& file);

/// Empirical type-7 quantile; needs at least 20 non-missing values.
double compute_threshold(std::span<const double> values, double q,
                         const std::string& site = {});

/// y* = y - u when y > u, 0 otherwise; NaN stays NaN.
std::vector<double> censor(std::span<const double> values, double threshold);

void apply_threshold(StationSeries& s, double threshold);
void apply_threshold(GridSeries& g, double threshold);

/// Station-wise and cell-wise quantile thresholds, then censoring.
void apply_quantile_thresholds(Dataset& data, double q);
void apply_fixed_thresholds(Dataset& data, const ThresholdTable& table);

struct MrlRow {
  double threshold = 0.0;
  double mean_excess = 0.0;
  std::size_t count = 0;
  double lower = 0.0; ///< normal-approximation 95% band
  double upper = 0.0;
};

/// Mean residual life table; thresholds with no exceedances are omitted.
std::vector<MrlRow> mean_residual_life(std::span<const double> values,
                                       std::span<const double> thresholds);

/// `n` evenly spaced candidate thresholds between two empirical quantiles.
std::vector<double> mrl_grid(std::span<const double> values, int n, double q_lo = 0.5,
                             double q_hi = 0.98);

/// Index into `cells` of the nearest centroid; ties go to the smallest cell id.
std::size_t nearest_centroid_index(const Location& loc, std::span<const GridSeries> cells);
std::int64_t nearest_centroid(const Location& loc, std::span<const GridSeries> cells);

/// Rows [1, 1(x*_{t-1} > 0), 1(x*_t > 0), 1(x*_{t+1} > 0)] using calendar
/// lags; lags outside the cell's record are 0. Throws InputError when a
/// timestamp has no grid value.
Eigen::MatrixXd build_indicator_matrix(std::span<const int> timestamps, const GridSeries& grid);

Eigen::MatrixXd build_W(const CollocatedPair& pair);

/// Pairs every station with its nearest grid cell and builds W.
std::vector<CollocatedPair> collocate(std::span<const StationSeries> stations,
                                      std::span<const GridSeries> cells);

/// Day index <-> ISO date (YYYY-MM-DD).
int parse_iso_date(const std::string& text);
std::string format_iso_date(int day);

} // namespace exdf
