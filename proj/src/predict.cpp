#include "exdf/predict.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "exdf/basis.hpp"
#include "exdf/error.hpp"
#include "exdf/extremes.hpp"
#include "exdf/gaussian.hpp"
#include "exdf/numeric.hpp"
#include "exdf/parallel.hpp"
#include "exdf/scale_fit.hpp"
#include "exdf/spatial.hpp"

namespace exdf {

namespace {

constexpr double kSameSiteKm = 1e-9;

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

} // namespace

std::vector<double> PredictiveDraws::column(std::size_t t) const {
  std::vector<double> out(n_draws());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = draws(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t));
  return out;
}

std::vector<double> PredictiveDraws::mean() const {
  std::vector<double> out(timestamps.size());
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t] = draws.col(static_cast<Eigen::Index>(t)).mean();
  return out;
}

std::vector<double> PredictiveDraws::mean_exceed_prob() const {
  std::vector<double> out(timestamps.size());
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t] = exceed_prob.col(static_cast<Eigen::Index>(t)).mean();
  return out;
}

std::vector<double> PredictiveDraws::quantile(double q) const {
  std::vector<double> out(timestamps.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    auto col = column(t);
    std::sort(col.begin(), col.end());
    out[t] = quantile_sorted(col, q);
  }
  return out;
}

GpConditional gp_conditional(std::span<const Location> sites, const Eigen::VectorXd& values,
                             double prior_mean, double variance, double decay,
                             const Location& target) {
  auto w = kriging_weights(sites, target, decay);
  return {prior_mean + w.weights.dot(values.array().matrix() -
                                     Eigen::VectorXd::Constant(values.size(), prior_mean)),
          variance * w.variance_factor};
}

Eigen::RowVectorXd idw_average(std::span<const Location> sites, const Eigen::MatrixXd& rows,
                               const Location& target, double power) {
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(rows.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    double d = distance_km(sites[i], target);
    if (d <= kSameSiteKm)
      return rows.row(static_cast<Eigen::Index>(i));
    double w = std::pow(d, -power);
    acc += w * rows.row(static_cast<Eigen::Index>(i));
    total += w;
  }
  return acc / total;
}

PredictiveDraws predict(const PosteriorArchive& archive, const Location& location,
                        std::span<const int> timestamps, std::span<const GridSeries> grid,
                        const PredictOptions& options) {
  if (grid.empty())
    throw InputError("prediction needs at least one grid cell");
  if (timestamps.empty())
    throw InputError("no prediction timestamps");
  const auto& dom = archive.domain;
  for (int t : timestamps)
    if (t < dom.t_min || t > dom.t_max)
      throw InputError("prediction date " + format_iso_date(t) + " lies outside the fitted period");

  const int n = archive.n_sites();
  const int m = archive.spec.m;
  const ModelSpec& spec = archive.spec;
  const GridSeries& cell = grid[nearest_centroid_index(location, grid)];
  if (cell.censored.size() != cell.values.size())
    throw InputError("grid cell " + std::to_string(cell.cell_id) + " has no threshold applied");

  CubicBSplineBasis basis(m, dom);
  const BasisMatrix phi0 = basis.matrix(timestamps);
  std::vector<int> cell_days;
  std::vector<double> cell_z, cell_raw;
  for (std::size_t k = 0; k < cell.timestamps.size(); ++k) {
    if (cell.timestamps[k] < dom.t_min || cell.timestamps[k] > dom.t_max)
      continue;
    cell_days.push_back(cell.timestamps[k]);
    cell_z.push_back(cell.censored[k]);
    cell_raw.push_back(cell.values[k]);
  }
  if (cell_days.size() < static_cast<std::size_t>(m))
    throw InputError("grid cell " + std::to_string(cell.cell_id) +
                     " does not cover the fitted period");

  std::vector<Location> sites;
  for (const auto& s : archive.sites)
    sites.push_back(s.location);
  int same_site = -1;
  for (int i = 0; i < n; ++i)
    if (distance_km(sites[static_cast<std::size_t>(i)], location) <= kSameSiteKm)
      same_site = i;
  KrigingWeights kw_a, kw_b;
  Eigen::VectorXd idw_w = Eigen::VectorXd::Zero(n);
  if (same_site < 0) {
    kw_a = kriging_weights(sites, location, spec.phi_alpha);
    kw_b = kriging_weights(sites, location, spec.phi_beta);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      idw_w(i) = std::pow(distance_km(sites[static_cast<std::size_t>(i)], location), -2.0);
      total += idw_w(i);
    }
    idw_w /= total;
  }

  const auto pooled = archive.pooled_draws(options.max_draws);
  const auto D = static_cast<Eigen::Index>(pooled.size());
  const auto T = static_cast<Eigen::Index>(timestamps.size());
  PredictiveDraws out;
  out.location = location;
  out.cell_id = cell.cell_id;
  out.timestamps.assign(timestamps.begin(), timestamps.end());
  out.draws.resize(D, T);
  out.exceed_prob.resize(D, T);
  Rng rng = make_rng(options.seed, options.stream, 0x5eed);

  auto kriged = [&](const Eigen::MatrixXd& field, double prior_mean, double variance,
                    const KrigingWeights& kw, int r) {
    double mu = prior_mean + kw.weights.dot(field.col(r).array().matrix() -
                                            Eigen::VectorXd::Constant(n, prior_mean));
    return mu + std::sqrt(variance * kw.variance_factor) * standard_normal(rng);
  };

  if (archive.model == ModelKind::exdf) {
    const Eigen::MatrixXd W0 = build_indicator_matrix(timestamps, cell);
    const ExceedanceRows rows = exceedance_rows(basis, cell_days, cell_z);
    const Eigen::VectorXd mu_d = spec.d_prior_mean();
    std::map<double, Eigen::VectorXd> d_cache;
    Eigen::VectorXd warm = mu_d;
    for (Eigen::Index k = 0; k < D; ++k) {
      ParameterState s = unflatten_state(pooled[static_cast<std::size_t>(k)], n, m);
      Eigen::VectorXd c0(m);
      Eigen::RowVectorXd lambda0;
      if (same_site >= 0) {
        c0 = s.c.row(same_site).transpose();
        lambda0 = s.lambda.row(same_site);
      } else {
        auto it = d_cache.find(s.xi_x);
        if (it == d_cache.end()) {
          warm = fit_log_scale_coefficients(rows, s.xi_x, mu_d, spec.kappa_d, &warm);
          it = d_cache.emplace(s.xi_x, warm).first;
        }
        const Eigen::VectorXd& d0 = it->second;
        for (int r = 0; r < m; ++r) {
          double a0 = kriged(s.alpha, 0.0, s.sigma2_alpha, kw_a, r);
          double b0 = kriged(s.beta, 1.0, s.sigma2_beta, kw_b, r);
          c0(r) = a0 + b0 * d0(r) + std::sqrt(s.sigma2_c) * standard_normal(rng);
        }
        lambda0 = idw_w.transpose() * s.lambda;
      }
      Eigen::VectorXd eta = phi0 * c0;
      Eigen::VectorXd logit_p = W0 * lambda0.transpose();
      for (Eigen::Index t = 0; t < T; ++t) {
        DeltaGpdParams p{{std::exp(eta(t)), s.xi_y}, logistic(logit_p(t))};
        out.exceed_prob(k, t) = p.exceed_prob;
        out.draws(k, t) = dgpd_sample(p, rng);
      }
    }
  } else {
    const double u = std::isnan(options.threshold) ? cell.threshold : options.threshold;
    const BasisMatrix psi = basis.matrix(cell_days);
    const Eigen::MatrixXd psi_gram = psi.transpose() * psi;
    const Eigen::Map<const Eigen::VectorXd> x(cell_raw.data(),
                                              static_cast<Eigen::Index>(cell_raw.size()));
    const Eigen::VectorXd psi_x = psi.transpose() * x;
    const double x_center = x.mean();
    for (Eigen::Index k = 0; k < D; ++k) {
      GaussianState s = unflatten_gaussian(pooled[static_cast<std::size_t>(k)], n, m);
      Eigen::VectorXd c0(m);
      if (same_site >= 0) {
        c0 = s.c.row(same_site).transpose();
      } else {
        Eigen::MatrixXd P = psi_gram / s.sigma2_x;
        P.diagonal().array() += 1.0 / spec.kappa_d;
        Eigen::VectorXd d0 = P.llt().solve(psi_x / s.sigma2_x +
                                           Eigen::VectorXd::Constant(m, x_center / spec.kappa_d));
        for (int r = 0; r < m; ++r) {
          double a0 = kriged(s.alpha, 0.0, s.sigma2_alpha, kw_a, r);
          double b0 = kriged(s.beta, 1.0, s.sigma2_beta, kw_b, r);
          c0(r) = a0 + b0 * d0(r) + std::sqrt(s.sigma2_c) * standard_normal(rng);
        }
      }
      Eigen::VectorXd level = phi0 * c0;
      const double sd = std::sqrt(s.sigma2_y);
      for (Eigen::Index t = 0; t < T; ++t) {
        double y = level(t) + sd * standard_normal(rng);
        out.exceed_prob(k, t) = normal_sf((u - level(t)) / sd);
        out.draws(k, t) = std::max(y - u, 0.0);
      }
    }
  }
  return out;
}

SurfaceStatistic parse_surface_statistic(const std::string& text) {
  if (text == "shortfall" || text == "expected_shortfall")
    return SurfaceStatistic::expected_shortfall;
  if (text == "range" || text == "exceedance_range")
    return SurfaceStatistic::exceedance_range;
  throw ConfigError("unknown statistic '" + text + "' (expected shortfall or range)");
}

double surface_value(const PredictiveDraws& p, SurfaceStatistic statistic) {
  if (statistic == SurfaceStatistic::expected_shortfall) {
    CompensatedSum s;
    double count = 0.0;
    for (Eigen::Index k = 0; k < p.draws.rows(); ++k)
      for (Eigen::Index t = 0; t < p.draws.cols(); ++t)
        if (p.draws(k, t) > 0.0) {
          s += p.draws(k, t);
          count += 1.0;
        }
    return count > 0.0 ? s.value() / count : std::numeric_limits<double>::quiet_NaN();
  }
  CompensatedSum s;
  double count = 0.0;
  for (Eigen::Index k = 0; k < p.draws.rows(); ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index t = 0; t < p.draws.cols(); ++t)
      if (p.draws(k, t) > 0.0) {
        lo = std::min(lo, p.draws(k, t));
        hi = std::max(hi, p.draws(k, t));
      }
    if (hi >= lo) {
      s += hi - lo;
      count += 1.0;
    }
  }
  return count > 0.0 ? s.value() / count : std::numeric_limits<double>::quiet_NaN();
}

std::vector<SurfaceRow> shortfall_surface(const PosteriorArchive& archive,
                                          std::span<const GridSeries> grid,
                                          SurfaceStatistic statistic,
                                          const PredictOptions& options) {
  std::vector<SurfaceRow> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    const auto& cell = grid[k];
    std::vector<int> days;
    for (int t : cell.timestamps)
      if (t >= archive.domain.t_min && t <= archive.domain.t_max)
        days.push_back(t);
    PredictOptions o = options;
    o.stream = options.stream + k;
    if (std::isnan(o.threshold))
      o.threshold = cell.threshold;
    auto p = predict(archive, cell.centroid, days, grid, o);
    rows[k] = {cell.cell_id, cell.centroid, surface_value(p, statistic)};
  });
  return rows;
}

void write_surface_csv(std::span<const SurfaceRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw InputError("cannot write " + path.string());
  out << "cell_id,easting,northing,value\n";
  for (const auto& r : rows)
    out << r.cell_id << ',' << fmt(r.centroid.easting_km) << ',' << fmt(r.centroid.northing_km)
        << ',' << (std::isnan(r.value) ? std::string() : fmt(r.value)) << '\n';
}

} // namespace exdf
