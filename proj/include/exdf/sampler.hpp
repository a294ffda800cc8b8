#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "exdf/rng.hpp"

namespace exdf {

/// Gaussian random-walk proposal for one parameter block.
///
/// During burn-in the log step scale follows a Robbins-Monro recursion
/// toward the target acceptance rate with diminishing gain, and from a
/// configured iteration onward the block's empirical covariance replaces
/// the identity shape (refreshed every 100 updates). freeze() ends all
/// adaptation; afterwards the proposal is a fixed symmetric kernel.
class AdaptiveProposal {
public:
  AdaptiveProposal() = default;
  AdaptiveProposal(std::string name, int dim, double initial_step, double target_accept);

  /// Default targets: 0.44 for scalars, 0.25 for vector blocks.
  static double default_target(int dim) { return dim == 1 ? 0.44 : 0.25; }

  Eigen::VectorXd propose(const Eigen::VectorXd& current, Rng& rng) const;

  /// Records the outcome of one proposal; `current` is the block value after
  /// the accept/reject decision. `collect` enables covariance learning.
  void record(bool accepted, const Eigen::VectorXd& current, bool adapting, bool collect);

  void freeze();

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  double step_scale() const { return std::exp(log_scale_); }
  const Eigen::MatrixXd& shape_cholesky() const { return chol_; }
  double target_accept() const { return target_; }
  /// Acceptance counts since freeze() (or since construction if never frozen).
  long proposals() const { return proposals_; }
  long acceptances() const { return accepted_; }
  double acceptance_rate() const;

private:
  void refresh_shape();

  std::string name_;
  int dim_ = 1;
  double target_ = 0.44;
  double log_scale_ = 0.0;
  Eigen::MatrixXd chol_;
  long adapt_steps_ = 0;
  bool frozen_ = false;
  bool using_empirical_ = false;
  long n_collected_ = 0;
  Eigen::VectorXd running_mean_;
  Eigen::MatrixXd running_m2_;
  long proposals_ = 0;
  long accepted_ = 0;
};

struct RandomWalkResult {
  Eigen::MatrixXd draws; ///< one row per retained draw
  double acceptance_rate = 0.0;
  double step_scale = 0.0;
};

/// Single-block adaptive random-walk Metropolis on an arbitrary log target.
RandomWalkResult run_random_walk(const std::function<double(const Eigen::VectorXd&)>& log_target,
                                 Eigen::VectorXd init, long n_iter, long burn_in, long thin,
                                 Rng& rng, double initial_step = 0.5);

} // namespace exdf
