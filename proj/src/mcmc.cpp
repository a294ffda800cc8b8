#include "exdf/mcmc.hpp"

#include <algorithm>
#include <cmath>

#include "exdf/error.hpp"
#include "exdf/numeric.hpp"
#include "exdf/parallel.hpp"

namespace exdf {

namespace {

constexpr double kShapeClip = 0.45;

double site_gpd(const ExceedanceRows& rows, const Eigen::Ref<const Eigen::VectorXd>& coef,
                double xi, std::vector<double>& eta, std::vector<double>& b) {
  eta.resize(rows.size());
  b.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    eta[k] = rows.basis[k].dot(coef);
    b[k] = rows.value[k] * std::exp(-eta[k]);
  }
  return gpd_sum_from_scaled(eta, b, xi);
}

} // namespace

ParameterState initial_state(const FusionData& data, const ModelSpec& spec) {
  const int n = static_cast<int>(data.n_sites());
  const int m = data.m;
  ParameterState s = ParameterState::zeros(n, m);
  std::vector<std::vector<double>> ys, xs;
  for (const auto& site : data.sites) {
    ys.push_back(site.y_exceed.value);
    xs.push_back(site.x_exceed.value);
  }
  s.xi_y = std::clamp(pooled_shape_mle(ys, -kShapeClip, kShapeClip), -kShapeClip, kShapeClip);
  s.xi_x = std::clamp(pooled_shape_mle(xs, -kShapeClip, kShapeClip), -kShapeClip, kShapeClip);

  const Eigen::VectorXd mu_d = spec.d_prior_mean();
  double ssr = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& site = data.sites[static_cast<std::size_t>(i)];
    double level = site.y_exceed.size() > 0 ? std::log(mean(site.y_exceed.value)) : 0.0;
    Eigen::VectorXd c_mean = Eigen::VectorXd::Constant(m, level);
    s.c.row(i) = fit_log_scale_coefficients(site.y_exceed, s.xi_y, c_mean, 10.0).transpose();
    s.d.row(i) = fit_log_scale_coefficients(site.x_exceed, s.xi_x, mu_d, spec.kappa_d).transpose();
    ssr += (s.c.row(i) - s.d.row(i)).squaredNorm();
  }
  s.sigma2_c = std::clamp(ssr / static_cast<double>(n * m), 0.05, 5.0);
  s.sigma2_alpha = 1.0;
  s.sigma2_beta = 1.0;
  return s;
}

ParameterState randomize_start(const ParameterState& base, const FusionData& data,
                               const ModelSpec& spec, Rng& rng) {
  double jitter = 1.0;
  for (int attempt = 0; attempt < 30; ++attempt, jitter *= 0.5) {
    ParameterState s = base;
    auto perturb = [&](Eigen::MatrixXd& M, double sd) {
      for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
          M(i, j) += jitter * sd * standard_normal(rng);
    };
    perturb(s.c, 0.1);
    perturb(s.d, 0.1);
    perturb(s.alpha, 0.1);
    perturb(s.beta, 0.1);
    perturb(s.lambda, 0.3);
    s.xi_y = std::clamp(s.xi_y + jitter * 0.02 * standard_normal(rng), -kShapeClip, kShapeClip);
    s.xi_x = std::clamp(s.xi_x + jitter * 0.02 * standard_normal(rng), -kShapeClip, kShapeClip);
    s.sigma2_c *= std::exp(jitter * 0.3 * standard_normal(rng));
    s.sigma2_alpha *= std::exp(jitter * 0.3 * standard_normal(rng));
    s.sigma2_beta *= std::exp(jitter * 0.3 * standard_normal(rng));
    if (std::isfinite(log_posterior(s, data, spec)))
      return s;
  }
  return base;
}

ExdfSampler::ExdfSampler(const FusionData& data, const ModelSpec& spec, ParameterState start)
    : data_(data), spec_(spec), state_(std::move(start)), mu_d_(spec.d_prior_mean()),
      alpha_prior_(data.dist, spec.phi_alpha), beta_prior_(data.dist, spec.phi_beta) {
  const int n = state_.n_sites();
  const int m = state_.basis_dim();
  if (n != static_cast<int>(data.n_sites()) || m != data.m)
    throw InputError("starting state does not match the data");
  cache_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& c = cache_[static_cast<std::size_t>(i)];
    const auto& site = data.sites[static_cast<std::size_t>(i)];
    c.y_gpd = site_gpd(site.y_exceed, state_.c.row(i).transpose(), state_.xi_y, c.y_eta, c.y_b);
    c.x_gpd = site_gpd(site.x_exceed, state_.d.row(i).transpose(), state_.xi_x, c.x_eta, c.x_b);
    c.y_bern = bernoulli(i, state_.lambda.row(i));
  }
  for (int r = 0; r < m; ++r) {
    q_alpha_.push_back(alpha_prior_.quadratic(state_.alpha.col(r), 0.0));
    q_beta_.push_back(beta_prior_.quadratic(state_.beta.col(r), 1.0));
  }
  if (!std::isfinite(log_target()))
    throw InputError("starting state has zero posterior density");

  c_block_ = blocks_.size();
  for (int i = 0; i < n; ++i)
    blocks_.emplace_back("c[" + data.sites[static_cast<std::size_t>(i)].id + "]", m, 0.1 / std::sqrt(m), 0.25);
  d_block_ = blocks_.size();
  for (int i = 0; i < n; ++i)
    blocks_.emplace_back("d[" + data.sites[static_cast<std::size_t>(i)].id + "]", m, 0.1 / std::sqrt(m), 0.25);
  alpha_block_ = blocks_.size();
  for (int r = 0; r < m; ++r)
    blocks_.emplace_back("alpha[" + std::to_string(r) + "]", n, 0.3,
                         AdaptiveProposal::default_target(n));
  beta_block_ = blocks_.size();
  for (int r = 0; r < m; ++r)
    blocks_.emplace_back("beta[" + std::to_string(r) + "]", n, 0.3,
                         AdaptiveProposal::default_target(n));
  lambda_block_ = blocks_.size();
  for (int i = 0; i < n; ++i)
    blocks_.emplace_back("lambda[" + data.sites[static_cast<std::size_t>(i)].id + "]", 4, 0.3, 0.25);
  shape_block_ = blocks_.size();
  blocks_.emplace_back("xi_y", 1, 0.02, 0.44);
  blocks_.emplace_back("xi_x", 1, 0.02, 0.44);
  var_block_ = blocks_.size();
  for (const char* name : {"sigma2_c", "sigma2_alpha", "sigma2_beta"})
    blocks_.emplace_back(name, 1, 0.3, 0.44);
}

double ExdfSampler::link_row(int i) const {
  double s = 0.0;
  for (int r = 0; r < state_.basis_dim(); ++r)
    s += normal_logpdf(state_.c(i, r), state_.alpha(i, r) + state_.beta(i, r) * state_.d(i, r),
                       state_.sigma2_c);
  return s;
}

double ExdfSampler::link_col(int r) const {
  double s = 0.0;
  for (int i = 0; i < state_.n_sites(); ++i)
    s += normal_logpdf(state_.c(i, r), state_.alpha(i, r) + state_.beta(i, r) * state_.d(i, r),
                       state_.sigma2_c);
  return s;
}

double ExdfSampler::link_ssr() const {
  Eigen::MatrixXd e = state_.c - state_.alpha - state_.beta.cwiseProduct(state_.d);
  return e.squaredNorm();
}

double ExdfSampler::bernoulli(int i, const Eigen::RowVectorXd& lambda) const {
  const auto& site = data_.sites[static_cast<std::size_t>(i)];
  double s = 0.0;
  for (int p = 0; p < 8; ++p) {
    auto up = static_cast<std::size_t>(p);
    if (site.y_zero_count[up] == 0 && site.y_exceed_count[up] == 0)
      continue;
    double eta = pattern_logit(lambda, p);
    s += site.y_zero_count[up] * log1m_logistic(eta) + site.y_exceed_count[up] * log_logistic(eta);
  }
  return s;
}

double ExdfSampler::d_prior(const Eigen::RowVectorXd& d) const {
  double s = 0.0;
  for (Eigen::Index r = 0; r < d.size(); ++r)
    s += normal_logpdf(d(r), mu_d_(r), spec_.kappa_d);
  return s;
}

double ExdfSampler::lambda_prior(const Eigen::RowVectorXd& lambda) const {
  double s = 0.0;
  for (std::size_t l = 0; l < 4; ++l)
    s += normal_logpdf(lambda(static_cast<Eigen::Index>(l)), spec_.mu_lambda[l],
                       spec_.sigma2_lambda[l]);
  return s;
}

double ExdfSampler::log_variance_target(double log_s2, double quad, double count,
                                        const GammaPrior& prior) const {
  double s2 = std::exp(log_s2);
  return -0.5 * count * log_s2 - 0.5 * quad / s2 + inverse_variance_gamma_logpdf(s2, prior) +
         log_s2;
}

double ExdfSampler::log_target() const {
  const int n = state_.n_sites();
  const int m = state_.basis_dim();
  CompensatedSum s;
  for (int i = 0; i < n; ++i) {
    const auto& c = cache_[static_cast<std::size_t>(i)];
    s += c.y_gpd;
    s += c.y_bern;
    s += c.x_gpd;
    s += link_row(i);
    s += d_prior(state_.d.row(i));
    s += lambda_prior(state_.lambda.row(i));
  }
  for (int r = 0; r < m; ++r) {
    s += alpha_prior_.logpdf(state_.alpha.col(r), 0.0, state_.sigma2_alpha);
    s += beta_prior_.logpdf(state_.beta.col(r), 1.0, state_.sigma2_beta);
  }
  s += laplace_logprior(state_.xi_y, spec_.shape_prior_y);
  s += laplace_logprior(state_.xi_x, spec_.shape_prior_x);
  s += inverse_variance_gamma_logpdf(state_.sigma2_c, spec_.precision_c);
  s += inverse_variance_gamma_logpdf(state_.sigma2_alpha, spec_.precision_alpha);
  s += inverse_variance_gamma_logpdf(state_.sigma2_beta, spec_.precision_beta);
  s += std::log(state_.sigma2_c) + std::log(state_.sigma2_alpha) + std::log(state_.sigma2_beta);
  double v = s.value();
  return std::isnan(v) ? kNegInf : v;
}

bool ExdfSampler::accept(double delta, Rng& rng) const {
  double u = uniform01(rng);
  if (std::isnan(delta) || delta == kNegInf)
    return false;
  return std::log(u) < delta;
}

void ExdfSampler::update_c(int i, Rng& rng, bool adapting, bool collect) {
  auto& block = blocks_[c_block_ + static_cast<std::size_t>(i)];
  auto& cache = cache_[static_cast<std::size_t>(i)];
  const auto& site = data_.sites[static_cast<std::size_t>(i)];
  Eigen::VectorXd cur = state_.c.row(i).transpose();
  Eigen::VectorXd prop = block.propose(cur, rng);
  std::vector<double> eta, b;
  double gpd = site_gpd(site.y_exceed, prop, state_.xi_y, eta, b);
  double old_link = link_row(i);
  state_.c.row(i) = prop.transpose();
  double delta = gpd == kNegInf ? kNegInf : gpd - cache.y_gpd + link_row(i) - old_link;
  bool ok = accept(delta, rng);
  if (ok) {
    cache.y_gpd = gpd;
    cache.y_eta = std::move(eta);
    cache.y_b = std::move(b);
  } else {
    state_.c.row(i) = cur.transpose();
  }
  block.record(ok, state_.c.row(i).transpose(), adapting, collect);
}

void ExdfSampler::update_d(int i, Rng& rng, bool adapting, bool collect) {
  auto& block = blocks_[d_block_ + static_cast<std::size_t>(i)];
  auto& cache = cache_[static_cast<std::size_t>(i)];
  const auto& site = data_.sites[static_cast<std::size_t>(i)];
  Eigen::VectorXd cur = state_.d.row(i).transpose();
  Eigen::VectorXd prop = block.propose(cur, rng);
  std::vector<double> eta, b;
  double gpd = site_gpd(site.x_exceed, prop, state_.xi_x, eta, b);
  double old_rest = link_row(i) + d_prior(state_.d.row(i));
  state_.d.row(i) = prop.transpose();
  double delta =
      gpd == kNegInf ? kNegInf : gpd - cache.x_gpd + link_row(i) + d_prior(state_.d.row(i)) - old_rest;
  bool ok = accept(delta, rng);
  if (ok) {
    cache.x_gpd = gpd;
    cache.x_eta = std::move(eta);
    cache.x_b = std::move(b);
  } else {
    state_.d.row(i) = cur.transpose();
  }
  block.record(ok, state_.d.row(i).transpose(), adapting, collect);
}

void ExdfSampler::update_field(int r, bool alpha, Rng& rng, bool adapting, bool collect) {
  auto& block = blocks_[(alpha ? alpha_block_ : beta_block_) + static_cast<std::size_t>(r)];
  Eigen::MatrixXd& field = alpha ? state_.alpha : state_.beta;
  const SpatialPrior& prior = alpha ? alpha_prior_ : beta_prior_;
  const double mean = alpha ? 0.0 : 1.0;
  const double var = alpha ? state_.sigma2_alpha : state_.sigma2_beta;
  double& q = alpha ? q_alpha_[static_cast<std::size_t>(r)] : q_beta_[static_cast<std::size_t>(r)];

  Eigen::VectorXd cur = field.col(r);
  Eigen::VectorXd prop = block.propose(cur, rng);
  double old_link = link_col(r);
  field.col(r) = prop;
  double q_new = prior.quadratic(prop, mean);
  double delta = link_col(r) - old_link - 0.5 * (q_new - q) / var;
  bool ok = accept(delta, rng);
  if (ok)
    q = q_new;
  else
    field.col(r) = cur;
  block.record(ok, field.col(r), adapting, collect);
}

void ExdfSampler::update_lambda(int i, Rng& rng, bool adapting, bool collect) {
  auto& block = blocks_[lambda_block_ + static_cast<std::size_t>(i)];
  auto& cache = cache_[static_cast<std::size_t>(i)];
  Eigen::VectorXd cur = state_.lambda.row(i).transpose();
  Eigen::VectorXd prop = block.propose(cur, rng);
  Eigen::RowVectorXd pr = prop.transpose();
  double bern = bernoulli(i, pr);
  double delta = bern - cache.y_bern + lambda_prior(pr) - lambda_prior(state_.lambda.row(i));
  bool ok = accept(delta, rng);
  if (ok) {
    state_.lambda.row(i) = pr;
    cache.y_bern = bern;
  }
  block.record(ok, state_.lambda.row(i).transpose(), adapting, collect);
}

void ExdfSampler::update_shape(bool y_side, Rng& rng, bool adapting, bool collect) {
  auto& block = blocks_[shape_block_ + (y_side ? 0 : 1)];
  double& xi = y_side ? state_.xi_y : state_.xi_x;
  const LaplacePrior& prior = y_side ? spec_.shape_prior_y : spec_.shape_prior_x;
  Eigen::VectorXd cur = Eigen::VectorXd::Constant(1, xi);
  double prop = block.propose(cur, rng)(0);
  double prior_new = laplace_logprior(prop, prior);
  std::vector<double> site_new(cache_.size(), 0.0);
  double delta = kNegInf;
  if (prior_new != kNegInf) {
    delta = prior_new - laplace_logprior(xi, prior);
    for (std::size_t i = 0; i < cache_.size() && delta != kNegInf; ++i) {
      const auto& c = cache_[i];
      site_new[i] = y_side ? gpd_sum_from_scaled(c.y_eta, c.y_b, prop)
                           : gpd_sum_from_scaled(c.x_eta, c.x_b, prop);
      delta = site_new[i] == kNegInf ? kNegInf : delta + site_new[i] - (y_side ? c.y_gpd : c.x_gpd);
    }
  }
  bool ok = accept(delta, rng);
  if (ok) {
    xi = prop;
    for (std::size_t i = 0; i < cache_.size(); ++i)
      (y_side ? cache_[i].y_gpd : cache_[i].x_gpd) = site_new[i];
  }
  block.record(ok, Eigen::VectorXd::Constant(1, xi), adapting, collect);
}

void ExdfSampler::update_variances(Rng& rng, bool adapting, bool collect) {
  const double count = static_cast<double>(state_.n_sites()) * state_.basis_dim();
  double q_a = 0.0, q_b = 0.0;
  for (std::size_t r = 0; r < q_alpha_.size(); ++r) {
    q_a += q_alpha_[r];
    q_b += q_beta_[r];
  }
  struct Target {
    double* value;
    double quad;
    const GammaPrior* prior;
  };
  const Target targets[3] = {{&state_.sigma2_c, link_ssr(), &spec_.precision_c},
                             {&state_.sigma2_alpha, q_a, &spec_.precision_alpha},
                             {&state_.sigma2_beta, q_b, &spec_.precision_beta}};
  for (std::size_t k = 0; k < 3; ++k) {
    auto& block = blocks_[var_block_ + k];
    const auto& t = targets[k];
    double cur = std::log(*t.value);
    double prop = block.propose(Eigen::VectorXd::Constant(1, cur), rng)(0);
    double delta = log_variance_target(prop, t.quad, count, *t.prior) -
                   log_variance_target(cur, t.quad, count, *t.prior);
    bool ok = accept(delta, rng);
    if (ok)
      *t.value = std::exp(prop);
    block.record(ok, Eigen::VectorXd::Constant(1, std::log(*t.value)), adapting, collect);
  }
}

void ExdfSampler::sweep(Rng& rng, bool adapting, bool collect) {
  const int n = state_.n_sites();
  const int m = state_.basis_dim();
  for (int i = 0; i < n; ++i)
    update_c(i, rng, adapting, collect);
  for (int i = 0; i < n; ++i)
    update_d(i, rng, adapting, collect);
  for (int r = 0; r < m; ++r)
    update_field(r, true, rng, adapting, collect);
  for (int r = 0; r < m; ++r)
    update_field(r, false, rng, adapting, collect);
  for (int i = 0; i < n; ++i)
    update_lambda(i, rng, adapting, collect);
  update_shape(true, rng, adapting, collect);
  update_shape(false, rng, adapting, collect);
  update_variances(rng, adapting, collect);
}

void ExdfSampler::freeze() {
  for (auto& b : blocks_)
    b.freeze();
}

PosteriorArchive run_mcmc(const FusionData& data, const ModelSpec& spec,
                          const McmcSettings& settings, const ProgressFn& progress) {
  spec.validate();
  settings.validate();
  if (spec.m != data.m)
    throw ConfigError("model basis dimension does not match the prepared data");
  const int n = static_cast<int>(data.n_sites());

  PosteriorArchive archive;
  archive.model = ModelKind::exdf;
  archive.spec = spec;
  archive.settings = settings;
  archive.domain = data.domain;
  for (const auto& s : data.sites)
    archive.sites.push_back({s.id, s.location, s.cell_id, s.threshold_y, s.threshold_x});
  archive.layout = ParameterLayout::exdf(n, data.m);

  const auto n_chains = static_cast<std::size_t>(settings.n_chains);
  archive.chains.resize(n_chains);
  archive.blocks.resize(n_chains);
  const ParameterState base = initial_state(data, spec);
  const long draws = settings.draws_per_chain();

  parallel_for(n_chains, [&](std::size_t k) {
    Rng rng = make_rng(settings.seed, k);
    ExdfSampler sampler(data, spec, randomize_start(base, data, spec, rng));
    Eigen::MatrixXd out(draws, static_cast<Eigen::Index>(archive.layout.size()));
    long row = 0;
    for (long it = 0; it < settings.n_iter; ++it) {
      bool adapting = it < settings.burn_in;
      if (it == settings.burn_in)
        sampler.freeze();
      sampler.sweep(rng, adapting, it >= settings.burn_in / 4);
      if (!adapting && (it - settings.burn_in + 1) % settings.thin == 0 && row < draws)
        out.row(row++) = flatten(sampler.state()).transpose();
      if (progress && (it + 1) % 10000 == 0)
        progress(static_cast<int>(k), it + 1);
    }
    archive.chains[k] = std::move(out);
    for (const auto& b : sampler.blocks())
      archive.blocks[k].push_back({b.name(), b.acceptance_rate(), b.step_scale()});
  });

  for (std::size_t k = 0; k < n_chains; ++k)
    for (const auto& b : archive.blocks[k])
      if (b.acceptance_rate == 0.0)
        archive.warnings.push_back("chain " + std::to_string(k) + ": block " + b.name +
                                   " accepted no proposals after burn-in");
  return archive;
}

} // namespace exdf
