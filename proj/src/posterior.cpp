#include "exdf/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "exdf/error.hpp"
#include "exdf/numeric.hpp"
#include "exdf/spatial.hpp"

namespace exdf {

std::vector<Location> FusionData::locations() const {
  std::vector<Location> out;
  out.reserve(sites.size());
  for (const auto& s : sites)
    out.push_back(s.location);
  return out;
}

BasisDomain data_domain(std::span<const CollocatedPair> pairs) {
  if (pairs.empty())
    throw InputError("no collocated sites");
  int lo = std::numeric_limits<int>::max();
  int hi = std::numeric_limits<int>::min();
  for (const auto& p : pairs) {
    for (const auto* ts : {&p.station.timestamps, &p.grid.timestamps}) {
      if (ts->empty())
        continue;
      lo = std::min(lo, ts->front());
      hi = std::max(hi, ts->back());
    }
  }
  return {static_cast<double>(lo), static_cast<double>(hi)};
}

FusionData prepare_fusion_data(std::span<const CollocatedPair> pairs, int m,
                               std::optional<BasisDomain> domain) {
  FusionData data;
  data.m = m;
  data.domain = domain ? *domain : data_domain(pairs);
  CubicBSplineBasis basis(m, data.domain);
  std::vector<Location> locs;
  for (const auto& p : pairs) {
    if (p.station.censored.size() != p.station.values.size())
      throw InputError("station '" + p.station.id + "' has no threshold applied");
    if (static_cast<std::size_t>(p.W.rows()) != p.station.timestamps.size())
      throw InputError("W does not match the timestamps of station '" + p.station.id + "'");
    SiteLikelihoodData s;
    s.id = p.station.id;
    s.location = p.station.location;
    s.cell_id = p.grid.cell_id;
    s.threshold_y = p.station.threshold;
    s.threshold_x = p.grid.threshold;
    std::vector<Eigen::Index> rows;
    for (std::size_t j = 0; j < p.station.timestamps.size(); ++j) {
      if (is_missing(p.station.censored[j]))
        continue;
      rows.push_back(static_cast<Eigen::Index>(j));
      s.y_timestamps.push_back(p.station.timestamps[j]);
      s.y.push_back(p.station.censored[j]);
    }
    s.W.resize(static_cast<Eigen::Index>(rows.size()), 4);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto ri = static_cast<Eigen::Index>(r);
      s.W.row(ri) = p.W.row(rows[r]);
      int pattern = (s.W(ri, 1) > 0.5 ? 4 : 0) | (s.W(ri, 2) > 0.5 ? 2 : 0) |
                    (s.W(ri, 3) > 0.5 ? 1 : 0);
      if (s.y[r] > 0.0)
        ++s.y_exceed_count[static_cast<std::size_t>(pattern)];
      else
        ++s.y_zero_count[static_cast<std::size_t>(pattern)];
    }
    s.phi = basis.matrix(s.y_timestamps);
    s.y_exceed = exceedance_rows(basis, s.y_timestamps, s.y);
    s.x_timestamps = p.grid.timestamps;
    s.x = p.grid.censored;
    if (s.x.size() != s.x_timestamps.size())
      throw InputError("grid cell " + std::to_string(p.grid.cell_id) + " has no threshold applied");
    s.psi = basis.matrix(s.x_timestamps);
    s.x_exceed = exceedance_rows(basis, s.x_timestamps, s.x);
    locs.push_back(s.location);
    data.sites.push_back(std::move(s));
  }
  data.dist = distance_matrix(locs);
  return data;
}

double pattern_logit(const Eigen::Ref<const Eigen::RowVectorXd>& lambda, int pattern) {
  return lambda(0) + ((pattern & 4) ? lambda(1) : 0.0) + ((pattern & 2) ? lambda(2) : 0.0) +
         ((pattern & 1) ? lambda(3) : 0.0);
}

SpatialPrior::SpatialPrior(const Eigen::MatrixXd& dist, double decay) {
  Eigen::MatrixXd K = exp_covariance(dist, decay, 1.0);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw InputError("spatial correlation matrix is not positive definite");
  precision_ = llt.solve(Eigen::MatrixXd::Identity(K.rows(), K.cols()));
  Eigen::MatrixXd L = llt.matrixL();
  log_det_ = 2.0 * L.diagonal().array().log().sum();
}

double SpatialPrior::quadratic(const Eigen::Ref<const Eigen::VectorXd>& v, double mean) const {
  Eigen::VectorXd r = v.array() - mean;
  return r.dot(precision_ * r);
}

double SpatialPrior::logpdf(const Eigen::Ref<const Eigen::VectorXd>& v, double mean,
                            double variance) const {
  if (!(variance > 0.0))
    return kNegInf;
  const double n = static_cast<double>(v.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi * variance) + log_det_ +
                 quadratic(v, mean) / variance);
}

double PosteriorTerms::total() const {
  CompensatedSum s;
  for (const auto* v : {&y_loglik, &x_loglik, &c_link, &d_prior, &lambda_prior})
    for (double t : *v)
      s += t;
  s += alpha_field;
  s += beta_field;
  s += shape_priors;
  s += variance_priors;
  double t = s.value();
  return std::isnan(t) ? kNegInf : t;
}

PosteriorTerms log_posterior_terms(const ParameterState& state, const FusionData& data,
                                   const ModelSpec& spec) {
  const auto n = static_cast<int>(data.n_sites());
  const int m = data.m;
  if (state.c.rows() != n || state.c.cols() != m || state.d.rows() != n || state.d.cols() != m ||
      state.alpha.rows() != n || state.beta.rows() != n || state.lambda.rows() != n ||
      state.lambda.cols() != 4)
    throw InputError("parameter state shape does not match the data");

  PosteriorTerms t;
  t.y_loglik.assign(static_cast<std::size_t>(n), 0.0);
  t.x_loglik.assign(static_cast<std::size_t>(n), 0.0);
  t.c_link.assign(static_cast<std::size_t>(n), 0.0);
  t.d_prior.assign(static_cast<std::size_t>(n), 0.0);
  t.lambda_prior.assign(static_cast<std::size_t>(n), 0.0);

  t.shape_priors = laplace_logprior(state.xi_y, spec.shape_prior_y) +
                   laplace_logprior(state.xi_x, spec.shape_prior_x);
  t.variance_priors = inverse_variance_gamma_logpdf(state.sigma2_c, spec.precision_c) +
                      inverse_variance_gamma_logpdf(state.sigma2_alpha, spec.precision_alpha) +
                      inverse_variance_gamma_logpdf(state.sigma2_beta, spec.precision_beta);
  if (t.shape_priors == kNegInf || t.variance_priors == kNegInf)
    return t;

  const Eigen::VectorXd mu_d = spec.d_prior_mean();
  for (int i = 0; i < n; ++i) {
    const auto& s = data.sites[static_cast<std::size_t>(i)];
    auto ui = static_cast<std::size_t>(i);
    Eigen::VectorXd log_sy = s.phi * state.c.row(i).transpose();
    Eigen::VectorXd logit_p = s.W * state.lambda.row(i).transpose();
    CompensatedSum ly;
    for (std::size_t j = 0; j < s.y.size(); ++j) {
      auto jj = static_cast<Eigen::Index>(j);
      DeltaGpdParams p{{std::exp(log_sy(jj)), state.xi_y}, logistic(logit_p(jj))};
      ly += dgpd_loglik(s.y[j], p);
    }
    t.y_loglik[ui] = ly.value();

    Eigen::VectorXd log_sx = s.psi * state.d.row(i).transpose();
    CompensatedSum lx;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      // Exceedance probability fixed at the empirical indicator.
      double p_exceed = s.x[k] > 0.0 ? 1.0 : 0.0;
      DeltaGpdParams p{{std::exp(log_sx(static_cast<Eigen::Index>(k))), state.xi_x}, p_exceed};
      lx += dgpd_loglik(s.x[k], p);
    }
    t.x_loglik[ui] = lx.value();

    CompensatedSum lc, ld;
    for (int r = 0; r < m; ++r) {
      lc += normal_logpdf(state.c(i, r), state.alpha(i, r) + state.beta(i, r) * state.d(i, r),
                          state.sigma2_c);
      ld += normal_logpdf(state.d(i, r), mu_d(r), spec.kappa_d);
    }
    t.c_link[ui] = lc.value();
    t.d_prior[ui] = ld.value();

    double ll = 0.0;
    for (int l = 0; l < 4; ++l)
      ll += normal_logpdf(state.lambda(i, l), spec.mu_lambda[static_cast<std::size_t>(l)],
                          spec.sigma2_lambda[static_cast<std::size_t>(l)]);
    t.lambda_prior[ui] = ll;
  }

  SpatialPrior alpha_prior(data.dist, spec.phi_alpha);
  SpatialPrior beta_prior(data.dist, spec.phi_beta);
  CompensatedSum fa, fb;
  for (int r = 0; r < m; ++r) {
    fa += alpha_prior.logpdf(state.alpha.col(r), 0.0, state.sigma2_alpha);
    fb += beta_prior.logpdf(state.beta.col(r), 1.0, state.sigma2_beta);
  }
  t.alpha_field = fa.value();
  t.beta_field = fb.value();
  return t;
}

double log_posterior(const ParameterState& state, const FusionData& data, const ModelSpec& spec) {
  return log_posterior_terms(state, data, spec).total();
}

} // namespace exdf
