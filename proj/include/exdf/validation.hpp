#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exdf/archive.hpp"
#include "exdf/metrics.hpp"
#include "exdf/predict.hpp"

namespace exdf {

/// Scores of one predictive against one observed censored series.
struct SiteMetrics {
  std::string site;
  std::string model;
  std::size_t n_obs = 0;
  std::size_t n_exceed = 0;
  bool converged = true;
  double max_rhat = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double mae = std::numeric_limits<double>::quiet_NaN();
  double crps = std::numeric_limits<double>::quiet_NaN();
  /// Same scores restricted to observed exceedances (y* > 0).
  double rmse_exceed = std::numeric_limits<double>::quiet_NaN();
  double mae_exceed = std::numeric_limits<double>::quiet_NaN();
  double crps_exceed = std::numeric_limits<double>::quiet_NaN();
  ClassificationMetrics classification;
};

/// `observed` is aligned with p.timestamps; NaN entries are skipped. Point
/// predictions are posterior predictive means; exceedance is predicted
/// when the mean exceedance probability reaches `cutoff`.
SiteMetrics score_predictive(const PredictiveDraws& p, std::span<const double> observed,
                             double cutoff = 0.5);

/// Fraction of observations inside the pointwise central predictive
/// interval of the given level.
double interval_coverage(const PredictiveDraws& p, std::span<const double> observed,
                         double level = 0.95);

struct LosoOptions {
  ModelKind model = ModelKind::exdf;
  McmcSettings settings;
  PredictOptions predict;
  double rhat_max = 1.1;
  double cutoff = 0.5;
  /// Also score the nearest cell's raw value floored at the station
  /// threshold, reported as model "grid".
  bool grid_baseline = true;
};

/// Leave-one-site-out: refit without each station, predict it, score.
/// Refits whose split-R-hat exceeds rhat_max (only checked with two or more
/// chains) are flagged and their metrics withheld.
std::vector<SiteMetrics> loso_cv(std::span<const CollocatedPair> pairs,
                                 std::span<const GridSeries> grid, const ModelSpec& spec,
                                 const LosoOptions& options);

void write_metrics_csv(std::span<const SiteMetrics> rows, const std::filesystem::path& path);

struct QqRow {
  double level = 0.0;
  double observed = 0.0;
  double predicted = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Observed positive exceedances against predictive quantiles at levels
/// (i - 0.5)/k. Bands are the 2.5% and 97.5% points of per-draw quantile
/// curves, each from the positive values of one predictive draw. Needs at
/// least 10 observed exceedances.
std::vector<QqRow> qq_table(const PredictiveDraws& p, std::span<const double> observed);

void write_qq_csv(std::span<const QqRow> rows, const std::filesystem::path& path);

} // namespace exdf
