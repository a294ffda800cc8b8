#pragma once

#include <span>
#include <string>
#include <vector>

#include "exdf/data.hpp"

namespace exdf {

struct VariogramBin {
  double mean_distance = 0.0;
  double semivariance = 0.0;
  std::size_t pair_count = 0;
};

/// gamma(h) = sill * (1 - exp(-decay * h)), no nugget.
struct ExponentialVariogram {
  double sill = 0.0;
  double decay = 0.0;
  bool at_bound = false;
  double evaluate(double h) const;
};

struct VariogramFitOptions {
  int n_bins = 8;
  double decay_min = 1e-3;
  double decay_max = 50.0;
};

/// Equal-count distance bins over all site pairs.
std::vector<VariogramBin> empirical_variogram(std::span<const Location> sites,
                                              std::span<const double> values, int n_bins);

/// Weighted least squares with Cressie weights N_h / gamma(h)^2. The sill
/// is profiled out in closed form; the decay is searched on a log grid
/// over [decay_min, decay_max] and refined by golden section. A variogram
/// with no variation returns decay_min flagged as at_bound.
ExponentialVariogram fit_exponential_variogram(std::span<const VariogramBin> bins,
                                               const VariogramFitOptions& options = {});

struct SiteRegression {
  std::string id;
  Location location;
  double intercept = 0.0;
  double slope = 0.0;
};

/// Per-site OLS of y* on x* over days where both are observed. Sites with
/// constant x* are skipped and reported in `warnings`.
std::vector<SiteRegression> fit_site_regressions(std::span<const CollocatedPair> pairs,
                                                 std::vector<std::string>& warnings);

struct DecayPrefit {
  double phi_alpha = 0.0;
  double phi_beta = 0.0;
  ExponentialVariogram alpha_fit;
  ExponentialVariogram beta_fit;
  std::vector<VariogramBin> alpha_bins;
  std::vector<VariogramBin> beta_bins;
  std::vector<std::string> warnings;
};

/// Frequentist pre-fit of the decay rates of the intercept and slope fields.
DecayPrefit prefit_decay(std::span<const CollocatedPair> pairs,
                         const VariogramFitOptions& options = {});

} // namespace exdf
