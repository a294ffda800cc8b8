#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "exdf/basis.hpp"

namespace exdf {

/// Nonzero part of one cubic B-spline row.
struct SparseBasisRow {
  int first = 0;
  std::array<double, 4> weight{};

  double dot(const Eigen::Ref<const Eigen::VectorXd>& coef) const {
    return weight[0] * coef(first) + weight[1] * coef(first + 1) + weight[2] * coef(first + 2) +
           weight[3] * coef(first + 3);
  }
};

/// Strictly positive censored values with their basis rows.
struct ExceedanceRows {
  std::vector<SparseBasisRow> basis;
  std::vector<double> value;

  std::size_t size() const { return value.size(); }
};

/// Rows with censored value > 0 (NaN entries skipped).
ExceedanceRows exceedance_rows(const CubicBSplineBasis& basis, std::span<const int> timestamps,
                               std::span<const double> censored);

/// Sum of GPD log densities with log-scales `eta` and b = z exp(-eta);
/// -infinity on a support violation.
double gpd_sum_from_scaled(std::span<const double> eta, std::span<const double> scaled,
                           double xi);

/// Posterior mode of coefficients for log sigma(t) = B_t . coef under GPD
/// exceedances with fixed shape and an N(prior_mean, prior_var I) prior.
/// Newton iterations with step halving; the objective is concave for
/// shape > -1.
Eigen::VectorXd fit_log_scale_coefficients(const ExceedanceRows& rows, double xi,
                                           const Eigen::VectorXd& prior_mean, double prior_var,
                                           const Eigen::VectorXd* start = nullptr);

/// Shape maximizing the pooled likelihood of several samples, each with its
/// own constant scale; searched over [lo, hi].
double pooled_shape_mle(std::span<const std::vector<double>> samples, double lo = -0.45,
                        double hi = 0.45);

} // namespace exdf
