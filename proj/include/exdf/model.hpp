#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "exdf/extremes.hpp"

namespace exdf {

/// Hyperparameters of the fusion model. Decay rates are fixed inputs.
struct ModelSpec {
  int m = 60;
  double phi_alpha = 1.6;
  double phi_beta = 1.6;
  LaplacePrior shape_prior_y{0.0, 0.05};
  LaplacePrior shape_prior_x{0.0, 0.05};
  GammaPrior precision_alpha{2.0, 1.0};
  GammaPrior precision_beta{2.0, 1.0};
  GammaPrior precision_c{2.0, 1.0};
  /// Prior mean of every d_i; empty means zeros, one entry is broadcast.
  std::vector<double> mu_d;
  /// Sigma_d = kappa_d * I.
  double kappa_d = 100.0;
  std::array<double, 4> mu_lambda{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> sigma2_lambda{1.0, 1.0, 1.0, 1.0};
  /// Observation-variance priors, used by the Gaussian baseline only.
  GammaPrior precision_obs_y{2.0, 1.0};
  GammaPrior precision_obs_x{2.0, 1.0};

  Eigen::VectorXd d_prior_mean() const;

  /// Throws ConfigError on any invalid hyperparameter.
  void validate() const;
};

/// One point of the joint parameter space. Matrices are sites x basis
/// (c, d, alpha, beta) and sites x 4 (lambda).
struct ParameterState {
  Eigen::MatrixXd c;
  Eigen::MatrixXd d;
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd lambda;
  double xi_y = 0.0;
  double xi_x = 0.0;
  double sigma2_c = 1.0;
  double sigma2_alpha = 1.0;
  double sigma2_beta = 1.0;

  static ParameterState zeros(int n, int m);
  int n_sites() const { return static_cast<int>(c.rows()); }
  int basis_dim() const { return static_cast<int>(c.cols()); }
};

struct ParameterGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  int rows = 1;
  int cols = 1;
};

/// Named contiguous groups of a flattened state; matrices are stored
/// row-major (site-major).
struct ParameterLayout {
  std::vector<ParameterGroup> groups;

  std::size_t size() const;
  const ParameterGroup& group(const std::string& name) const;
  /// e.g. "c[2,5]" or "xi_y".
  std::string element_name(std::size_t index) const;

  static ParameterLayout exdf(int n, int m);
  static ParameterLayout gaussian(int n, int m);
};

Eigen::VectorXd flatten(const ParameterState& s);
ParameterState unflatten_state(const Eigen::Ref<const Eigen::VectorXd>& v, int n, int m);

/// Row-major copy helpers shared by the state layouts.
void write_matrix(const Eigen::MatrixXd& M, Eigen::VectorXd& out, std::size_t offset);
Eigen::MatrixXd read_matrix(const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t offset,
                            int rows, int cols);

} // namespace exdf
