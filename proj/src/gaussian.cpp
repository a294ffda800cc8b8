#include "exdf/gaussian.hpp"

#include <cmath>

#include "exdf/error.hpp"
#include "exdf/numeric.hpp"
#include "exdf/parallel.hpp"
#include "exdf/posterior.hpp"
#include "exdf/spatial.hpp"

namespace exdf {

Eigen::VectorXd flatten(const GaussianState& s) {
  const auto n = static_cast<int>(s.c.rows());
  const auto m = static_cast<int>(s.c.cols());
  auto L = ParameterLayout::gaussian(n, m);
  Eigen::VectorXd v(static_cast<Eigen::Index>(L.size()));
  write_matrix(s.c, v, L.groups[0].offset);
  write_matrix(s.d, v, L.groups[1].offset);
  write_matrix(s.alpha, v, L.groups[2].offset);
  write_matrix(s.beta, v, L.groups[3].offset);
  auto tail = static_cast<Eigen::Index>(L.groups[4].offset);
  v(tail) = s.sigma2_y;
  v(tail + 1) = s.sigma2_x;
  v(tail + 2) = s.sigma2_c;
  v(tail + 3) = s.sigma2_alpha;
  v(tail + 4) = s.sigma2_beta;
  return v;
}

GaussianState unflatten_gaussian(const Eigen::Ref<const Eigen::VectorXd>& v, int n, int m) {
  auto L = ParameterLayout::gaussian(n, m);
  if (static_cast<std::size_t>(v.size()) != L.size())
    throw InputError("draw length does not match the Gaussian layout");
  GaussianState s;
  s.c = read_matrix(v, L.groups[0].offset, n, m);
  s.d = read_matrix(v, L.groups[1].offset, n, m);
  s.alpha = read_matrix(v, L.groups[2].offset, n, m);
  s.beta = read_matrix(v, L.groups[3].offset, n, m);
  auto tail = static_cast<Eigen::Index>(L.groups[4].offset);
  s.sigma2_y = v(tail);
  s.sigma2_x = v(tail + 1);
  s.sigma2_c = v(tail + 2);
  s.sigma2_alpha = v(tail + 3);
  s.sigma2_beta = v(tail + 4);
  return s;
}

GaussianData prepare_gaussian_data(std::span<const CollocatedPair> pairs, int m,
                                   std::optional<BasisDomain> domain) {
  GaussianData data;
  data.m = m;
  data.domain = domain ? *domain : data_domain(pairs);
  CubicBSplineBasis basis(m, data.domain);
  std::vector<Location> locs;
  CompensatedSum x_total;
  double x_count = 0.0;
  for (const auto& p : pairs) {
    GaussianSiteData s;
    s.id = p.station.id;
    s.location = p.station.location;
    s.cell_id = p.grid.cell_id;
    s.threshold_y = p.station.threshold;
    s.threshold_x = p.grid.threshold;
    std::vector<double> y;
    for (std::size_t j = 0; j < p.station.timestamps.size(); ++j) {
      if (is_missing(p.station.values[j]))
        continue;
      s.y_timestamps.push_back(p.station.timestamps[j]);
      y.push_back(p.station.values[j]);
    }
    s.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    s.phi = basis.matrix(s.y_timestamps);
    s.x = Eigen::Map<const Eigen::VectorXd>(p.grid.values.data(),
                                            static_cast<Eigen::Index>(p.grid.values.size()));
    s.psi = basis.matrix(p.grid.timestamps);
    s.phi_gram = s.phi.transpose() * s.phi;
    s.psi_gram = s.psi.transpose() * s.psi;
    s.phi_y = s.phi.transpose() * s.y;
    s.psi_x = s.psi.transpose() * s.x;
    s.yy = s.y.squaredNorm();
    s.xx = s.x.squaredNorm();
    for (double v : p.grid.values)
      x_total += v;
    x_count += static_cast<double>(p.grid.values.size());
    locs.push_back(s.location);
    data.sites.push_back(std::move(s));
  }
  data.dist = distance_matrix(locs);
  data.d_center = x_count > 0.0 ? x_total.value() / x_count : 0.0;
  return data;
}

GammaPrior sigma2_conditional(const GammaPrior& prior, double count, double ssr) {
  return {prior.shape + 0.5 * count, prior.rate + 0.5 * ssr};
}

Eigen::VectorXd sample_canonical_normal(const Eigen::MatrixXd& precision,
                                        const Eigen::VectorXd& linear, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw InputError("conditional precision is not positive definite");
  Eigen::VectorXd mean = llt.solve(linear);
  Eigen::VectorXd z(linear.size());
  for (Eigen::Index k = 0; k < z.size(); ++k)
    z(k) = standard_normal(rng);
  return mean + llt.matrixU().solve(z);
}

namespace {

double draw_sigma2(const GammaPrior& prior, double count, double ssr, Rng& rng) {
  GammaPrior post = sigma2_conditional(prior, count, ssr);
  return 1.0 / std::gamma_distribution<double>(post.shape, 1.0 / post.rate)(rng);
}

double quad_ssr(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross, double sq,
                const Eigen::VectorXd& coef) {
  return std::max(0.0, sq - 2.0 * coef.dot(cross) + coef.dot(gram * coef));
}

class GibbsChain {
public:
  GibbsChain(const GaussianData& data, const ModelSpec& spec, Rng& rng)
      : data_(data), spec_(spec), n_(static_cast<int>(data.n_sites())), m_(data.m) {
    Eigen::MatrixXd Ka = exp_covariance(data.dist, spec.phi_alpha, 1.0);
    Eigen::MatrixXd Kb = exp_covariance(data.dist, spec.phi_beta, 1.0);
    Ka_inv_ = Ka.llt().solve(Eigen::MatrixXd::Identity(n_, n_));
    Kb_inv_ = Kb.llt().solve(Eigen::MatrixXd::Identity(n_, n_));
    init(rng);
  }

  void sweep(Rng& rng) {
    auto& s = state_;
    const double kappa = spec_.kappa_d;
    for (int i = 0; i < n_; ++i) {
      const auto& site = data_.sites[static_cast<std::size_t>(i)];
      Eigen::MatrixXd P = site.phi_gram / s.sigma2_y;
      P.diagonal().array() += 1.0 / s.sigma2_c;
      Eigen::VectorXd mean_link =
          (s.alpha.row(i) + s.beta.row(i).cwiseProduct(s.d.row(i))).transpose();
      Eigen::VectorXd b = site.phi_y / s.sigma2_y + mean_link / s.sigma2_c;
      s.c.row(i) = sample_canonical_normal(P, b, rng).transpose();
    }
    for (int i = 0; i < n_; ++i) {
      const auto& site = data_.sites[static_cast<std::size_t>(i)];
      Eigen::MatrixXd P = site.psi_gram / s.sigma2_x;
      Eigen::VectorXd beta = s.beta.row(i).transpose();
      P.diagonal() += (beta.array().square() / s.sigma2_c + 1.0 / kappa).matrix();
      Eigen::VectorXd b = site.psi_x / s.sigma2_x +
                          beta.cwiseProduct((s.c.row(i) - s.alpha.row(i)).transpose()) / s.sigma2_c +
                          Eigen::VectorXd::Constant(m_, data_.d_center / kappa);
      s.d.row(i) = sample_canonical_normal(P, b, rng).transpose();
    }
    for (int r = 0; r < m_; ++r) {
      Eigen::MatrixXd P = Ka_inv_ / s.sigma2_alpha;
      P.diagonal().array() += 1.0 / s.sigma2_c;
      Eigen::VectorXd b = (s.c.col(r) - s.beta.col(r).cwiseProduct(s.d.col(r))) / s.sigma2_c;
      s.alpha.col(r) = sample_canonical_normal(P, b, rng);
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n_);
    for (int r = 0; r < m_; ++r) {
      Eigen::MatrixXd P = Kb_inv_ / s.sigma2_beta;
      P.diagonal() += (s.d.col(r).array().square() / s.sigma2_c).matrix();
      Eigen::VectorXd b = Kb_inv_ * ones / s.sigma2_beta +
                          s.d.col(r).cwiseProduct(s.c.col(r) - s.alpha.col(r)) / s.sigma2_c;
      s.beta.col(r) = sample_canonical_normal(P, b, rng);
    }
    double ssr_y = 0.0, ssr_x = 0.0, count_y = 0.0, count_x = 0.0;
    for (int i = 0; i < n_; ++i) {
      const auto& site = data_.sites[static_cast<std::size_t>(i)];
      ssr_y += quad_ssr(site.phi_gram, site.phi_y, site.yy, s.c.row(i).transpose());
      ssr_x += quad_ssr(site.psi_gram, site.psi_x, site.xx, s.d.row(i).transpose());
      count_y += static_cast<double>(site.y.size());
      count_x += static_cast<double>(site.x.size());
    }
    const double nm = static_cast<double>(n_) * m_;
    s.sigma2_y = draw_sigma2(spec_.precision_obs_y, count_y, ssr_y, rng);
    s.sigma2_x = draw_sigma2(spec_.precision_obs_x, count_x, ssr_x, rng);
    Eigen::MatrixXd e = s.c - s.alpha - s.beta.cwiseProduct(s.d);
    s.sigma2_c = draw_sigma2(spec_.precision_c, nm, e.squaredNorm(), rng);
    double qa = 0.0, qb = 0.0;
    for (int r = 0; r < m_; ++r) {
      Eigen::VectorXd a = s.alpha.col(r);
      Eigen::VectorXd bb = s.beta.col(r) - ones;
      qa += a.dot(Ka_inv_ * a);
      qb += bb.dot(Kb_inv_ * bb);
    }
    s.sigma2_alpha = draw_sigma2(spec_.precision_alpha, nm, qa, rng);
    s.sigma2_beta = draw_sigma2(spec_.precision_beta, nm, qb, rng);
  }

  const GaussianState& state() const { return state_; }

private:
  void init(Rng& rng) {
    auto& s = state_;
    s.c.resize(n_, m_);
    s.d.resize(n_, m_);
    s.alpha = Eigen::MatrixXd::Zero(n_, m_);
    s.beta = Eigen::MatrixXd::Ones(n_, m_);
    double ssr_y = 0.0, ssr_x = 0.0, count_y = 0.0, count_x = 0.0;
    for (int i = 0; i < n_; ++i) {
      const auto& site = data_.sites[static_cast<std::size_t>(i)];
      Eigen::MatrixXd Gy = site.phi_gram;
      Gy.diagonal().array() += 1e-6;
      Eigen::MatrixXd Gx = site.psi_gram;
      Gx.diagonal().array() += 1e-6;
      s.c.row(i) = Gy.ldlt().solve(site.phi_y).transpose();
      s.d.row(i) = Gx.ldlt().solve(site.psi_x).transpose();
      ssr_y += quad_ssr(site.phi_gram, site.phi_y, site.yy, s.c.row(i).transpose());
      ssr_x += quad_ssr(site.psi_gram, site.psi_x, site.xx, s.d.row(i).transpose());
      count_y += static_cast<double>(site.y.size());
      count_x += static_cast<double>(site.x.size());
    }
    s.sigma2_y = std::max(ssr_y / std::max(count_y, 1.0), 1e-6);
    s.sigma2_x = std::max(ssr_x / std::max(count_x, 1.0), 1e-6);
    s.c.array() += 0.1 * std::sqrt(s.sigma2_y) * standard_normal(rng);
    s.sigma2_c = 1.0;
    s.sigma2_alpha = 1.0;
    s.sigma2_beta = 1.0;
  }

  const GaussianData& data_;
  const ModelSpec& spec_;
  int n_, m_;
  Eigen::MatrixXd Ka_inv_, Kb_inv_;
  GaussianState state_;
};

} // namespace

PosteriorArchive fit_gaussian(const GaussianData& data, const ModelSpec& spec,
                              const McmcSettings& settings) {
  spec.validate();
  settings.validate();
  if (spec.m != data.m)
    throw ConfigError("model basis dimension does not match the prepared data");
  const int n = static_cast<int>(data.n_sites());
  PosteriorArchive archive;
  archive.model = ModelKind::gaussian;
  archive.spec = spec;
  archive.settings = settings;
  archive.domain = data.domain;
  for (const auto& s : data.sites)
    archive.sites.push_back({s.id, s.location, s.cell_id, s.threshold_y, s.threshold_x});
  archive.layout = ParameterLayout::gaussian(n, data.m);
  const auto n_chains = static_cast<std::size_t>(settings.n_chains);
  archive.chains.resize(n_chains);
  archive.blocks.resize(n_chains);
  const long draws = settings.draws_per_chain();
  parallel_for(n_chains, [&](std::size_t k) {
    Rng rng = make_rng(settings.seed, k);
    GibbsChain chain(data, spec, rng);
    Eigen::MatrixXd out(draws, static_cast<Eigen::Index>(archive.layout.size()));
    long row = 0;
    for (long it = 0; it < settings.n_iter; ++it) {
      chain.sweep(rng);
      if (it >= settings.burn_in && (it - settings.burn_in + 1) % settings.thin == 0 &&
          row < draws)
        out.row(row++) = flatten(chain.state()).transpose();
    }
    archive.chains[k] = std::move(out);
    archive.blocks[k].push_back({"gibbs", 1.0, 0.0});
  });
  return archive;
}

} // namespace exdf
