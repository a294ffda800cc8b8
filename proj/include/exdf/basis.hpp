#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

namespace exdf {

/// Rows are time points, columns are basis functions.
using BasisMatrix = Eigen::MatrixXd;

struct BasisDomain {
  double t_min = 0.0;
  double t_max = 1.0;
};

/// Clamped cubic B-spline basis with m functions on equally spaced knots
/// over a domain. Station and grid design matrices built from the same
/// instance share one knot set.
class CubicBSplineBasis {
public:
  static constexpr int kDegree = 3;

  CubicBSplineBasis(int m, BasisDomain domain);

  int dimension() const { return m_; }
  const BasisDomain& domain() const { return domain_; }
  const std::vector<double>& knots() const { return knots_; }

  /// The four functions that can be nonzero at t: returns the index of the
  /// first one and writes their values.
  int evaluate_nonzero(double t, std::array<double, 4>& values) const;

  Eigen::RowVectorXd evaluate(double t) const;
  BasisMatrix matrix(std::span<const int> timestamps) const;

private:
  int m_;
  BasisDomain domain_;
  std::vector<double> knots_;
};

/// Design matrix for `timestamps`; requires m >= 4, every timestamp inside
/// the domain and at least m distinct timestamps.
BasisMatrix build_basis(std::span<const int> timestamps, int m, BasisDomain domain);

} // namespace exdf
