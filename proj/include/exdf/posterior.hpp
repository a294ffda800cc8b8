#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exdf/basis.hpp"
#include "exdf/data.hpp"
#include "exdf/model.hpp"
#include "exdf/scale_fit.hpp"

namespace exdf {

/// Likelihood inputs of one collocated site. Dense matrices keep every
/// observed row; the sparse exceedance lists and the W-pattern counts are
/// what the sampler evaluates.
struct SiteLikelihoodData {
  std::string id;
  Location location;
  std::int64_t cell_id = 0;
  double threshold_y = 0.0;
  double threshold_x = 0.0;

  // Station side, observed days only.
  std::vector<int> y_timestamps;
  std::vector<double> y;
  BasisMatrix phi;
  Eigen::MatrixXd W;
  ExceedanceRows y_exceed;
  /// Zero / positive counts per W pattern (w1 << 2 | w2 << 1 | w3).
  std::array<int, 8> y_zero_count{};
  std::array<int, 8> y_exceed_count{};

  // Grid side.
  std::vector<int> x_timestamps;
  std::vector<double> x;
  BasisMatrix psi;
  ExceedanceRows x_exceed;
};

struct FusionData {
  int m = 0;
  BasisDomain domain;
  std::vector<SiteLikelihoodData> sites;
  Eigen::MatrixXd dist;

  std::size_t n_sites() const { return sites.size(); }
  std::vector<Location> locations() const;
};

/// Smallest domain covering every station and grid timestamp of the pairs.
BasisDomain data_domain(std::span<const CollocatedPair> pairs);

FusionData prepare_fusion_data(std::span<const CollocatedPair> pairs, int m,
                               std::optional<BasisDomain> domain = std::nullopt);

/// Linear predictor of the exceedance logit for a W pattern.
double pattern_logit(const Eigen::Ref<const Eigen::RowVectorXd>& lambda, int pattern);

/// Unit-variance exponential correlation factorized once; decays are fixed.
class SpatialPrior {
public:
  SpatialPrior() = default;
  SpatialPrior(const Eigen::MatrixXd& dist, double decay);

  /// log N_n(v; mean, variance * K).
  double logpdf(const Eigen::Ref<const Eigen::VectorXd>& v, double mean, double variance) const;
  /// (v - mean)' K^{-1} (v - mean).
  double quadratic(const Eigen::Ref<const Eigen::VectorXd>& v, double mean) const;
  const Eigen::MatrixXd& precision() const { return precision_; }
  int dim() const { return static_cast<int>(precision_.rows()); }

private:
  Eigen::MatrixXd precision_;
  double log_det_ = 0.0;
};

/// Log posterior broken down by source; total() is the full log density
/// of the hierarchical model at a state (variances on their natural scale).
struct PosteriorTerms {
  std::vector<double> y_loglik;
  std::vector<double> x_loglik;
  std::vector<double> c_link;
  std::vector<double> d_prior;
  std::vector<double> lambda_prior;
  double alpha_field = 0.0;
  double beta_field = 0.0;
  double shape_priors = 0.0;
  double variance_priors = 0.0;

  double total() const;
};

/// Plain row-by-row evaluation over the dense matrices.
PosteriorTerms log_posterior_terms(const ParameterState& state, const FusionData& data,
                                   const ModelSpec& spec);
double log_posterior(const ParameterState& state, const FusionData& data, const ModelSpec& spec);

} // namespace exdf
