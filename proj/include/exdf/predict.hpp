#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "exdf/archive.hpp"
#include "exdf/data.hpp"
#include "exdf/rng.hpp"

namespace exdf {

/// Posterior predictive exceedances at one location: one row per posterior
/// draw, one column per timestamp.
struct PredictiveDraws {
  Location location;
  std::int64_t cell_id = 0;
  std::vector<int> timestamps;
  Eigen::MatrixXd draws;       ///< nonnegative exceedances, 0 = none
  Eigen::MatrixXd exceed_prob; ///< per-draw probability of exceeding

  std::size_t n_draws() const { return static_cast<std::size_t>(draws.rows()); }
  std::vector<double> column(std::size_t t) const;
  /// Posterior predictive mean exceedance per timestamp.
  std::vector<double> mean() const;
  /// Posterior mean exceedance probability per timestamp.
  std::vector<double> mean_exceed_prob() const;
  /// Pointwise type-7 quantile of the predictive per timestamp.
  std::vector<double> quantile(double q) const;
};

struct PredictOptions {
  std::size_t max_draws = 1000;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  /// Threshold of the target for Gaussian archives (raw -> exceedance);
  /// NaN uses the nearest cell's threshold.
  double threshold = std::numeric_limits<double>::quiet_NaN();
};

/// Conditional N(mean, variance) of a GP value at a new location given the
/// field at fitted sites.
struct GpConditional {
  double mean = 0.0;
  double variance = 0.0;
};
GpConditional gp_conditional(std::span<const Location> sites, const Eigen::VectorXd& values,
                             double prior_mean, double variance, double decay,
                             const Location& target);

/// Inverse-distance-squared average of per-site rows; a site at zero
/// distance gets all the weight.
Eigen::RowVectorXd idw_average(std::span<const Location> sites, const Eigen::MatrixXd& rows,
                               const Location& target, double power = 2.0);

/// Posterior predictive at `location` on `timestamps` using the nearest
/// grid cell (thresholds applied). A location within 1e-9 km of a fitted
/// site reuses that site's own coefficients.
PredictiveDraws predict(const PosteriorArchive& archive, const Location& location,
                        std::span<const int> timestamps, std::span<const GridSeries> grid,
                        const PredictOptions& options = {});

enum class SurfaceStatistic { expected_shortfall, exceedance_range };
SurfaceStatistic parse_surface_statistic(const std::string& text);

struct SurfaceRow {
  std::int64_t cell_id = 0;
  Location centroid;
  double value = std::numeric_limits<double>::quiet_NaN(); ///< NaN: no exceedances
};

/// Expected shortfall: mean of the strictly positive predictive
/// exceedances. Exceedance range: posterior mean over draws of the spread
/// (max - min) of each draw's positive exceedances.
double surface_value(const PredictiveDraws& p, SurfaceStatistic statistic);

/// Predicts at every grid centroid over the cell's days inside the basis
/// domain; cells run concurrently with per-cell RNG streams.
std::vector<SurfaceRow> shortfall_surface(const PosteriorArchive& archive,
                                          std::span<const GridSeries> grid,
                                          SurfaceStatistic statistic,
                                          const PredictOptions& options = {});

void write_surface_csv(std::span<const SurfaceRow> rows, const std::filesystem::path& path);

} // namespace exdf
