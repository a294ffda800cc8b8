#include "exdf/spatial.hpp"

#include <algorithm>
#include <cmath>

#include "exdf/error.hpp"

namespace exdf {

namespace {

double correlation(double dist, double decay) {
  return dist == 0.0 ? 1.0 : std::exp(-decay * dist);
}

} // namespace

Eigen::MatrixXd distance_matrix(std::span<const Location> locations) {
  const auto n = static_cast<Eigen::Index>(locations.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      D(i, j) = D(j, i) = distance_km(locations[static_cast<std::size_t>(i)],
                                      locations[static_cast<std::size_t>(j)]);
  return D;
}

Eigen::MatrixXd exp_covariance(const Eigen::MatrixXd& dist, double decay, double variance) {
  if (!(decay > 0.0))
    throw ConfigError("covariance decay must be positive");
  if (!(variance > 0.0))
    throw ConfigError("covariance variance must be positive");
  if (dist.rows() != dist.cols() || !dist.isApprox(dist.transpose(), 0.0) ||
      (dist.array() < 0.0).any())
    throw InputError("distance matrix must be square, symmetric and nonnegative");
  const Eigen::Index n = dist.rows();
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      C(i, j) = variance * correlation(dist(i, j), decay);
  C.diagonal().array() += kCovarianceJitter * variance;
  return C;
}

KrigingWeights kriging_weights(std::span<const Location> sites, const Location& target,
                               double decay) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd K = exp_covariance(distance_matrix(sites), decay, 1.0);
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k(i) = correlation(distance_km(sites[static_cast<std::size_t>(i)], target), decay);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw InputError("spatial covariance is not positive definite");
  KrigingWeights w;
  w.weights = llt.solve(k);
  w.variance_factor = std::max(0.0, 1.0 + kCovarianceJitter - k.dot(w.weights));
  return w;
}

} // namespace exdf
