#include "exdf/sampler.hpp"

#include <cmath>

#include "exdf/error.hpp"

namespace exdf {

namespace {
constexpr long kRefreshEvery = 100;
}

AdaptiveProposal::AdaptiveProposal(std::string name, int dim, double initial_step,
                                   double target_accept)
    : name_(std::move(name)), dim_(dim), target_(target_accept),
      log_scale_(std::log(initial_step)), chol_(Eigen::MatrixXd::Identity(dim, dim)),
      running_mean_(Eigen::VectorXd::Zero(dim)), running_m2_(Eigen::MatrixXd::Zero(dim, dim)) {
  if (dim < 1 || !(initial_step > 0.0))
    throw ConfigError("invalid proposal block '" + name_ + "'");
}

Eigen::VectorXd AdaptiveProposal::propose(const Eigen::VectorXd& current, Rng& rng) const {
  Eigen::VectorXd z(dim_);
  for (int k = 0; k < dim_; ++k)
    z(k) = standard_normal(rng);
  Eigen::VectorXd step = chol_.triangularView<Eigen::Lower>() * z;
  return current + std::exp(log_scale_) * step;
}

void AdaptiveProposal::record(bool accepted, const Eigen::VectorXd& current, bool adapting,
                              bool collect) {
  ++proposals_;
  if (accepted)
    ++accepted_;
  if (!adapting || frozen_)
    return;
  ++adapt_steps_;
  double gain = std::pow(1.0 + static_cast<double>(adapt_steps_) / 50.0, -0.6);
  log_scale_ += gain * ((accepted ? 1.0 : 0.0) - target_);
  if (!collect)
    return;
  ++n_collected_;
  Eigen::VectorXd delta = current - running_mean_;
  running_mean_ += delta / static_cast<double>(n_collected_);
  running_m2_ += delta * (current - running_mean_).transpose();
  if (n_collected_ >= std::max<long>(50, 20L * dim_) && n_collected_ % kRefreshEvery == 0)
    refresh_shape();
}

void AdaptiveProposal::refresh_shape() {
  Eigen::MatrixXd cov = running_m2_ / static_cast<double>(n_collected_ - 1);
  double scale = cov.diagonal().mean();
  if (!(scale > 0.0) || !std::isfinite(scale))
    return;
  cov.diagonal().array() += 1e-6 * scale;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    return;
  chol_ = llt.matrixL();
  if (!using_empirical_) {
    using_empirical_ = true;
    log_scale_ = std::log(2.38 / std::sqrt(static_cast<double>(dim_)));
  }
}

void AdaptiveProposal::freeze() {
  frozen_ = true;
  proposals_ = 0;
  accepted_ = 0;
}

double AdaptiveProposal::acceptance_rate() const {
  return proposals_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposals_);
}

RandomWalkResult run_random_walk(const std::function<double(const Eigen::VectorXd&)>& log_target,
                                 Eigen::VectorXd init, long n_iter, long burn_in, long thin,
                                 Rng& rng, double initial_step) {
  if (n_iter <= burn_in || thin < 1)
    throw ConfigError("random walk needs n_iter > burn_in and thin >= 1");
  const int dim = static_cast<int>(init.size());
  AdaptiveProposal block("theta", dim, initial_step, AdaptiveProposal::default_target(dim));
  Eigen::VectorXd x = std::move(init);
  double lp = log_target(x);
  RandomWalkResult out;
  out.draws.resize((n_iter - burn_in) / thin, dim);
  long row = 0;
  for (long it = 0; it < n_iter; ++it) {
    bool adapting = it < burn_in;
    if (it == burn_in)
      block.freeze();
    Eigen::VectorXd y = block.propose(x, rng);
    double lq = log_target(y);
    bool accept = std::log(uniform01(rng)) < lq - lp;
    if (accept) {
      x = std::move(y);
      lp = lq;
    }
    block.record(accept, x, adapting, it >= burn_in / 4);
    if (!adapting && (it - burn_in + 1) % thin == 0 && row < out.draws.rows())
      out.draws.row(row++) = x.transpose();
  }
  out.acceptance_rate = block.acceptance_rate();
  out.step_scale = block.step_scale();
  return out;
}

} // namespace exdf
