#include "exdf/basis.hpp"

#include <algorithm>
#include <set>

#include "exdf/error.hpp"

namespace exdf {

CubicBSplineBasis::CubicBSplineBasis(int m, BasisDomain domain) : m_(m), domain_(domain) {
  if (m < kDegree + 1)
    throw ConfigError("basis dimension must be at least 4");
  if (!(domain.t_max > domain.t_min))
    throw ConfigError("basis domain must have t_max > t_min");
  const int interior = m - kDegree - 1;
  knots_.reserve(static_cast<std::size_t>(m + kDegree + 1));
  for (int k = 0; k <= kDegree; ++k)
    knots_.push_back(domain.t_min);
  for (int k = 1; k <= interior; ++k)
    knots_.push_back(domain.t_min + (domain.t_max - domain.t_min) * k / (interior + 1));
  for (int k = 0; k <= kDegree; ++k)
    knots_.push_back(domain.t_max);
}

int CubicBSplineBasis::evaluate_nonzero(double t, std::array<double, 4>& values) const {
  if (t < domain_.t_min || t > domain_.t_max)
    throw InputError("basis evaluation outside the domain");
  // Knot span: knots_[span] <= t < knots_[span + 1], closed at the right end.
  int span = m_ - 1;
  if (t < domain_.t_max) {
    auto it = std::upper_bound(knots_.begin() + kDegree, knots_.begin() + m_ + 1, t);
    span = static_cast<int>(it - knots_.begin()) - 1;
  }
  // Cox-de Boor triangle (NURBS Book A2.2).
  std::array<double, 4> left{}, right{};
  values[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[j] = knots_[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      double temp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  return span - kDegree;
}

Eigen::RowVectorXd CubicBSplineBasis::evaluate(double t) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m_);
  std::array<double, 4> v{};
  int first = evaluate_nonzero(t, v);
  for (int k = 0; k < 4; ++k)
    row(first + k) = v[k];
  return row;
}

BasisMatrix CubicBSplineBasis::matrix(std::span<const int> timestamps) const {
  BasisMatrix B = BasisMatrix::Zero(static_cast<Eigen::Index>(timestamps.size()), m_);
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    int first = evaluate_nonzero(timestamps[i], v);
    for (int k = 0; k < 4; ++k)
      B(static_cast<Eigen::Index>(i), first + k) = v[k];
  }
  return B;
}

BasisMatrix build_basis(std::span<const int> timestamps, int m, BasisDomain domain) {
  std::set<int> distinct(timestamps.begin(), timestamps.end());
  if (static_cast<std::size_t>(m) > distinct.size())
    throw InputError("basis dimension " + std::to_string(m) + " exceeds the " +
                     std::to_string(distinct.size()) + " distinct timestamps");
  return CubicBSplineBasis(m, domain).matrix(timestamps);
}

} // namespace exdf
