#pragma once

// Probability kernels for censored threshold exceedances. Every density is
// returned on the log scale; support violations give -infinity so that
// Metropolis-Hastings proposals outside the support are simply rejected.

#include <limits>

#include "exdf/rng.hpp"

namespace exdf {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Below this |shape| the exponential limit of the GPD is used.
inline constexpr double kShapeZeroTol = 1e-8;

struct GpdParams {
  double scale = 1.0; ///< sigma_u > 0, same units as the exceedances
  double shape = 0.0; ///< xi
};

/// Zero-inflated GPD: point mass 1 - exceed_prob at zero, GPD otherwise.
struct DeltaGpdParams {
  GpdParams gpd;
  double exceed_prob = 1.0;
};

/// Laplace(location, scale) truncated to (-0.5, 0.5) and renormalized.
struct LaplacePrior {
  double location = 0.0;
  double scale = 0.05;
};

/// Gamma(shape, rate) prior placed on a precision 1 / sigma^2.
struct GammaPrior {
  double shape = 2.0;
  double rate = 1.0;
};

/// Upper end of the GPD support: infinity for shape >= 0, scale/|shape| otherwise.
double gpd_upper_endpoint(const GpdParams& p);

double gpd_logpdf(double z, const GpdParams& p);
double gpd_cdf(double z, const GpdParams& p);

/// Inverse of gpd_cdf on [0, 1). q = 1 is only finite for negative shape;
/// with shape >= 0 it throws InputError (unbounded quantile).
double gpd_quantile(double q, const GpdParams& p);

/// Log-likelihood of one censored value: z = 0 is a non-exceedance.
double dgpd_loglik(double z, const DeltaGpdParams& p);

/// Returns 0 with probability 1 - exceed_prob, otherwise an inverse-CDF GPD draw.
double dgpd_sample(const DeltaGpdParams& p, Rng& rng);

/// Throws ConfigError when prior.scale <= 0.
double laplace_logprior(double xi, const LaplacePrior& prior);

/// Inverse-CDF draw from the truncated Laplace prior.
double laplace_sample(const LaplacePrior& prior, Rng& rng);

double logistic(double x);
double logit(double p);

/// log(logistic(x)) and log(1 - logistic(x)) without cancellation.
double log_logistic(double x);
double log1m_logistic(double x);

double normal_logpdf(double x, double mean, double variance);

/// Log density of sigma^2 when 1/sigma^2 ~ Gamma(shape, rate).
double inverse_variance_gamma_logpdf(double sigma2, const GammaPrior& prior);

} // namespace exdf
