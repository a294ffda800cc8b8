#pragma once

#include <Eigen/Dense>
#include <span>

#include "exdf/data.hpp"

namespace exdf {

inline constexpr double kCovarianceJitter = 1e-8;

Eigen::MatrixXd distance_matrix(std::span<const Location> locations);

/// variance * exp(-decay * dist) with 1e-8 * variance added to the
/// diagonal. Zero distances map to `variance` even for infinite decay.
Eigen::MatrixXd exp_covariance(const Eigen::MatrixXd& dist, double decay, double variance);

/// Gaussian-process conditioning weights for a new location given fitted
/// sites under a unit-variance exponential covariance: the conditional mean
/// is weights . (values - prior_mean) + prior_mean and the conditional
/// variance is variance * variance_factor.
struct KrigingWeights {
  Eigen::VectorXd weights;
  double variance_factor = 1.0;
};

KrigingWeights kriging_weights(std::span<const Location> sites, const Location& target,
                               double decay);

} // namespace exdf
