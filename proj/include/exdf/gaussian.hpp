#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "exdf/archive.hpp"
#include "exdf/basis.hpp"
#include "exdf/data.hpp"
#include "exdf/model.hpp"
#include "exdf/rng.hpp"

namespace exdf {

/// Point of the Gaussian fusion model's parameter space.
struct GaussianState {
  Eigen::MatrixXd c;
  Eigen::MatrixXd d;
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd beta;
  double sigma2_y = 1.0;
  double sigma2_x = 1.0;
  double sigma2_c = 1.0;
  double sigma2_alpha = 1.0;
  double sigma2_beta = 1.0;
};

Eigen::VectorXd flatten(const GaussianState& s);
GaussianState unflatten_gaussian(const Eigen::Ref<const Eigen::VectorXd>& v, int n, int m);

/// Raw (uncensored) series of one collocated site with its sufficient
/// statistics.
struct GaussianSiteData {
  std::string id;
  Location location;
  std::int64_t cell_id = 0;
  double threshold_y = 0.0;
  double threshold_x = 0.0;
  std::vector<int> y_timestamps;
  Eigen::VectorXd y;
  BasisMatrix phi;
  Eigen::VectorXd x;
  BasisMatrix psi;
  Eigen::MatrixXd phi_gram, psi_gram;
  Eigen::VectorXd phi_y, psi_x;
  double yy = 0.0, xx = 0.0;
};

struct GaussianData {
  int m = 0;
  BasisDomain domain;
  std::vector<GaussianSiteData> sites;
  Eigen::MatrixXd dist;
  /// Prior mean of d: the mean raw grid value (raw units differ from the
  /// log-scale units of the ExDF d prior).
  double d_center = 0.0;

  std::size_t n_sites() const { return sites.size(); }
};

GaussianData prepare_gaussian_data(std::span<const CollocatedPair> pairs, int m,
                                   std::optional<BasisDomain> domain = std::nullopt);

/// Conditional of sigma^2 given `count` residuals with sum of squares `ssr`
/// when 1/sigma^2 ~ Gamma(prior): 1/sigma^2 ~ Gamma(a + count/2, b + ssr/2).
GammaPrior sigma2_conditional(const GammaPrior& prior, double count, double ssr);

/// Draws from N(P^{-1} b, P^{-1}).
Eigen::VectorXd sample_canonical_normal(const Eigen::MatrixXd& precision,
                                        const Eigen::VectorXd& linear, Rng& rng);

/// Gibbs sampler for the Gaussian fusion model; all conditionals conjugate.
PosteriorArchive fit_gaussian(const GaussianData& data, const ModelSpec& spec,
                              const McmcSettings& settings);

} // namespace exdf
