#include "exdf/extremes.hpp"

#include <cmath>
#include <numbers>

#include "exdf/error.hpp"

namespace exdf {

namespace {

bool near_zero_shape(double xi) { return std::abs(xi) < kShapeZeroTol; }

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

} // namespace

double gpd_upper_endpoint(const GpdParams& p) {
  if (p.shape >= 0.0 || near_zero_shape(p.shape))
    return std::numeric_limits<double>::infinity();
  return p.scale / -p.shape;
}

double gpd_logpdf(double z, const GpdParams& p) {
  if (!std::isfinite(z))
    throw InputError("gpd_logpdf: non-finite argument");
  if (z < 0.0 || !(p.scale > 0.0) || !std::isfinite(p.scale) || !std::isfinite(p.shape))
    return kNegInf;
  double log_scale = std::log(p.scale);
  if (near_zero_shape(p.shape))
    return -log_scale - z / p.scale;
  double a = p.shape * z / p.scale;
  if (1.0 + a <= 0.0)
    return kNegInf;
  return -log_scale - (1.0 / p.shape + 1.0) * std::log1p(a);
}

double gpd_cdf(double z, const GpdParams& p) {
  if (std::isnan(z))
    throw InputError("gpd_cdf: NaN argument");
  if (z <= 0.0)
    return 0.0;
  if (near_zero_shape(p.shape))
    return -std::expm1(-z / p.scale);
  double a = p.shape * z / p.scale;
  if (1.0 + a <= 0.0)
    return 1.0;
  return -std::expm1(-std::log1p(a) / p.shape);
}

double gpd_quantile(double q, const GpdParams& p) {
  if (!(q >= 0.0 && q <= 1.0))
    throw InputError("gpd_quantile: level outside [0, 1]");
  if (q == 1.0) {
    if (p.shape >= 0.0 || near_zero_shape(p.shape))
      throw InputError("gpd_quantile: unbounded upper quantile for shape >= 0");
    return gpd_upper_endpoint(p);
  }
  double log_tail = std::log1p(-q);
  if (near_zero_shape(p.shape))
    return -p.scale * log_tail;
  return p.scale / p.shape * std::expm1(-p.shape * log_tail);
}

double dgpd_loglik(double z, const DeltaGpdParams& p) {
  if (!std::isfinite(z))
    throw InputError("dgpd_loglik: non-finite argument");
  if (z < 0.0)
    return kNegInf;
  if (z == 0.0)
    return p.exceed_prob >= 1.0 ? kNegInf : std::log1p(-p.exceed_prob);
  if (p.exceed_prob <= 0.0)
    return kNegInf;
  return std::log(p.exceed_prob) + gpd_logpdf(z, p.gpd);
}

double dgpd_sample(const DeltaGpdParams& p, Rng& rng) {
  if (!(uniform01(rng) < p.exceed_prob))
    return 0.0;
  return gpd_quantile(uniform01(rng), p.gpd);
}

double laplace_logprior(double xi, const LaplacePrior& prior) {
  if (!(prior.scale > 0.0))
    throw ConfigError("Laplace prior scale must be positive");
  if (!(xi > -0.5 && xi < 0.5))
    return kNegInf;
  double b = prior.scale;
  double norm = 2.0 - std::exp((-0.5 - prior.location) / b) -
                std::exp((prior.location - 0.5) / b);
  return -std::log(b) - std::abs(xi - prior.location) / b - std::log(norm);
}

double laplace_sample(const LaplacePrior& prior, Rng& rng) {
  if (!(prior.scale > 0.0))
    throw ConfigError("Laplace prior scale must be positive");
  const double mu = prior.location;
  const double b = prior.scale;
  auto cdf = [&](double x) {
    return x < mu ? 0.5 * std::exp((x - mu) / b) : 1.0 - 0.5 * std::exp(-(x - mu) / b);
  };
  auto inv = [&](double u) {
    return u < 0.5 ? mu + b * std::log(2.0 * u) : mu - b * std::log(2.0 * (1.0 - u));
  };
  double lo = cdf(-0.5);
  double hi = cdf(0.5);
  for (;;) {
    double x = inv(lo + (hi - lo) * uniform01(rng));
    if (x > -0.5 && x < 0.5)
      return x;
  }
}

double logistic(double x) {
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double log_logistic(double x) { return -softplus(-x); }

double log1m_logistic(double x) { return -softplus(x); }

double normal_logpdf(double x, double mean, double variance) {
  double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

double inverse_variance_gamma_logpdf(double sigma2, const GammaPrior& prior) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    return kNegInf;
  double precision = 1.0 / sigma2;
  return prior.shape * std::log(prior.rate) - std::lgamma(prior.shape) +
         (prior.shape + 1.0) * std::log(precision) - prior.rate * precision;
}

} // namespace exdf
