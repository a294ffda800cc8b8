#include "exdf/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "exdf/error.hpp"
#include "exdf/numeric.hpp"

namespace exdf {

double ExponentialVariogram::evaluate(double h) const {
  return sill * -std::expm1(-decay * h);
}

std::vector<VariogramBin> empirical_variogram(std::span<const Location> sites,
                                              std::span<const double> values, int n_bins) {
  if (sites.size() != values.size())
    throw InputError("empirical_variogram: sites and values differ in length");
  if (n_bins < 1)
    throw ConfigError("variogram needs at least one bin");
  struct PairDiff {
    double dist;
    double half_sq;
  };
  std::vector<PairDiff> pairs;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      double diff = values[i] - values[j];
      pairs.push_back({distance_km(sites[i], sites[j]), 0.5 * diff * diff});
    }
  std::sort(pairs.begin(), pairs.end(),
            [](const PairDiff& a, const PairDiff& b) {
              return a.dist < b.dist || (a.dist == b.dist && a.half_sq < b.half_sq);
            });
  const std::size_t bins = std::min(pairs.size(), static_cast<std::size_t>(n_bins));
  std::vector<VariogramBin> out;
  for (std::size_t b = 0; b < bins; ++b) {
    std::size_t lo = b * pairs.size() / bins;
    std::size_t hi = (b + 1) * pairs.size() / bins;
    CompensatedSum d, g;
    for (std::size_t k = lo; k < hi; ++k) {
      d += pairs[k].dist;
      g += pairs[k].half_sq;
    }
    auto count = static_cast<double>(hi - lo);
    out.push_back({d.value() / count, g.value() / count, hi - lo});
  }
  return out;
}

namespace {

// Cressie objective at a given decay with the sill profiled out.
// With r_h = gammahat_h / g_h and t = 1/sill, sum N (r t - 1)^2 is
// minimized by t = sum N r / sum N r^2.
std::pair<double, double> cressie_profile(std::span<const VariogramBin> bins, double decay) {
  double snr = 0.0, snr2 = 0.0, sn = 0.0;
  for (const auto& b : bins) {
    double g = -std::expm1(-decay * b.mean_distance);
    double r = b.semivariance / g;
    auto n = static_cast<double>(b.pair_count);
    snr += n * r;
    snr2 += n * r * r;
    sn += n;
  }
  double t = snr / snr2;
  double objective = sn - snr * snr / snr2;
  return {objective, 1.0 / t};
}

} // namespace

ExponentialVariogram fit_exponential_variogram(std::span<const VariogramBin> bins,
                                               const VariogramFitOptions& options) {
  if (bins.size() < 3)
    throw InputError("variogram fit needs at least 3 distance bins, found " +
                     std::to_string(bins.size()));
  if (!(options.decay_min > 0.0 && options.decay_max > options.decay_min))
    throw ConfigError("invalid variogram decay bounds");
  double max_gamma = 0.0;
  for (const auto& b : bins)
    max_gamma = std::max(max_gamma, b.semivariance);
  if (!(max_gamma > 1e-300)) {
    // Spatially constant field: unbounded range.
    return {0.0, options.decay_min, true};
  }

  const double log_lo = std::log(options.decay_min);
  const double log_hi = std::log(options.decay_max);
  constexpr int kGrid = 200;
  int best = 0;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kGrid; ++k) {
    double obj = cressie_profile(bins, std::exp(log_lo + (log_hi - log_lo) * k / kGrid)).first;
    if (obj < best_obj) {
      best_obj = obj;
      best = k;
    }
  }
  double a = log_lo + (log_hi - log_lo) * std::max(best - 1, 0) / kGrid;
  double b = log_lo + (log_hi - log_lo) * std::min(best + 1, kGrid) / kGrid;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  auto f = [&](double log_decay) { return cressie_profile(bins, std::exp(log_decay)).first; };
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 100 && b - a > 1e-10; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double log_decay = 0.5 * (a + b);
  if (cressie_profile(bins, std::exp(log_decay)).first > best_obj)
    log_decay = log_lo + (log_hi - log_lo) * best / kGrid;
  ExponentialVariogram fit;
  fit.decay = std::clamp(std::exp(log_decay), options.decay_min, options.decay_max);
  fit.sill = cressie_profile(bins, fit.decay).second;
  fit.at_bound = fit.decay <= options.decay_min * 1.01 || fit.decay >= options.decay_max / 1.01;
  return fit;
}

std::vector<SiteRegression> fit_site_regressions(std::span<const CollocatedPair> pairs,
                                                 std::vector<std::string>& warnings) {
  std::vector<SiteRegression> out;
  for (const auto& p : pairs) {
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < p.station.timestamps.size(); ++j) {
      double y = p.station.censored[j];
      auto k = p.grid.index_of(p.station.timestamps[j]);
      if (is_missing(y) || k < 0)
        continue;
      xs.push_back(p.grid.censored[static_cast<std::size_t>(k)]);
      ys.push_back(y);
    }
    double mx = mean(xs), my = mean(ys);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxx += (xs[k] - mx) * (xs[k] - mx);
      sxy += (xs[k] - mx) * (ys[k] - my);
    }
    if (xs.size() < 2 || !(sxx > 1e-12 * std::max(1.0, mx * mx) * static_cast<double>(xs.size()))) {
      warnings.push_back("site '" + p.station.id +
                         "' skipped in decay pre-fit: remote-sensing exceedances are constant");
      continue;
    }
    double slope = sxy / sxx;
    out.push_back({p.station.id, p.station.location, my - slope * mx, slope});
  }
  return out;
}

DecayPrefit prefit_decay(std::span<const CollocatedPair> pairs,
                         const VariogramFitOptions& options) {
  if (pairs.size() < 4)
    throw InputError("decay pre-fit needs at least 4 stations");
  DecayPrefit out;
  auto regs = fit_site_regressions(pairs, out.warnings);
  std::vector<Location> locs;
  std::vector<double> intercepts, slopes;
  for (const auto& r : regs) {
    locs.push_back(r.location);
    intercepts.push_back(r.intercept);
    slopes.push_back(r.slope);
  }
  out.alpha_bins = empirical_variogram(locs, intercepts, options.n_bins);
  out.beta_bins = empirical_variogram(locs, slopes, options.n_bins);
  out.alpha_fit = fit_exponential_variogram(out.alpha_bins, options);
  out.beta_fit = fit_exponential_variogram(out.beta_bins, options);
  out.phi_alpha = out.alpha_fit.decay;
  out.phi_beta = out.beta_fit.decay;
  if (out.alpha_fit.at_bound)
    out.warnings.push_back("intercept variogram decay hit a search bound");
  if (out.beta_fit.at_bound)
    out.warnings.push_back("slope variogram decay hit a search bound");
  return out;
}

} // namespace exdf
