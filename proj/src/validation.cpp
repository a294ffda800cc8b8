#include "exdf/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "exdf/diagnostics.hpp"
#include "exdf/error.hpp"
#include "exdf/gaussian.hpp"
#include "exdf/mcmc.hpp"
#include "exdf/numeric.hpp"
#include "exdf/posterior.hpp"

namespace exdf {

namespace {

std::string fmt(double v) {
  if (std::isnan(v))
    return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

} // namespace

SiteMetrics score_predictive(const PredictiveDraws& p, std::span<const double> observed,
                             double cutoff) {
  if (observed.size() != p.timestamps.size())
    throw InputError("observations do not match the prediction timestamps");
  const auto means = p.mean();
  const auto probs = p.mean_exceed_prob();
  SiteMetrics out;
  std::vector<double> pred, obs, pred_exc, obs_exc, prob;
  std::vector<int> ind;
  CompensatedSum crps_all, crps_exc;
  for (std::size_t t = 0; t < observed.size(); ++t) {
    if (is_missing(observed[t]))
      continue;
    double c = crps(p.column(t), observed[t]);
    pred.push_back(means[t]);
    obs.push_back(observed[t]);
    prob.push_back(probs[t]);
    ind.push_back(observed[t] > 0.0 ? 1 : 0);
    crps_all += c;
    if (observed[t] > 0.0) {
      pred_exc.push_back(means[t]);
      obs_exc.push_back(observed[t]);
      crps_exc += c;
    }
  }
  out.n_obs = obs.size();
  out.n_exceed = obs_exc.size();
  if (!obs.empty()) {
    out.rmse = rmse(pred, obs);
    out.mae = mae(pred, obs);
    out.crps = crps_all.value() / static_cast<double>(obs.size());
    out.classification = classification_metrics(prob, ind, cutoff);
  }
  if (!obs_exc.empty()) {
    out.rmse_exceed = rmse(pred_exc, obs_exc);
    out.mae_exceed = mae(pred_exc, obs_exc);
    out.crps_exceed = crps_exc.value() / static_cast<double>(obs_exc.size());
  }
  return out;
}

double interval_coverage(const PredictiveDraws& p, std::span<const double> observed,
                         double level) {
  if (observed.size() != p.timestamps.size())
    throw InputError("observations do not match the prediction timestamps");
  const auto lo = p.quantile(0.5 * (1.0 - level));
  const auto hi = p.quantile(0.5 * (1.0 + level));
  double inside = 0.0, total = 0.0;
  for (std::size_t t = 0; t < observed.size(); ++t) {
    if (is_missing(observed[t]))
      continue;
    total += 1.0;
    if (observed[t] >= lo[t] && observed[t] <= hi[t])
      inside += 1.0;
  }
  return total > 0.0 ? inside / total : std::numeric_limits<double>::quiet_NaN();
}

std::vector<SiteMetrics> loso_cv(std::span<const CollocatedPair> pairs,
                                 std::span<const GridSeries> grid, const ModelSpec& spec,
                                 const LosoOptions& options) {
  if (pairs.size() < 3)
    throw InputError("leave-one-site-out validation needs at least 3 sites");
  const BasisDomain domain = data_domain(pairs);
  std::vector<SiteMetrics> out;
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    std::vector<CollocatedPair> train;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (k != s)
        train.push_back(pairs[k]);
    const auto& held = pairs[s].station;

    PosteriorArchive archive;
    if (options.model == ModelKind::exdf)
      archive = run_mcmc(prepare_fusion_data(train, spec.m, domain), spec, options.settings);
    else
      archive = fit_gaussian(prepare_gaussian_data(train, spec.m, domain), spec, options.settings);

    std::vector<int> days;
    std::vector<double> obs;
    for (std::size_t j = 0; j < held.timestamps.size(); ++j) {
      if (is_missing(held.censored[j]))
        continue;
      days.push_back(held.timestamps[j]);
      obs.push_back(held.censored[j]);
    }
    PredictOptions po = options.predict;
    po.stream = options.predict.stream + s;
    po.threshold = held.threshold;
    SiteMetrics m;
    double worst = std::numeric_limits<double>::quiet_NaN();
    bool converged = true;
    if (archive.n_chains() >= 2) {
      worst = 0.0;
      for (const auto& g : group_rhat(archive))
        worst = std::max(worst, g.max_rhat);
      converged = worst <= options.rhat_max;
    }
    if (converged) {
      auto p = predict(archive, held.location, days, grid, po);
      m = score_predictive(p, obs, options.cutoff);
    } else {
      m.n_obs = obs.size();
    }
    m.site = held.id;
    m.model = to_string(options.model);
    m.converged = converged;
    m.max_rhat = worst;
    out.push_back(m);

    if (options.grid_baseline) {
      const GridSeries& cell = grid[nearest_centroid_index(held.location, grid)];
      PredictiveDraws point;
      point.location = held.location;
      point.cell_id = cell.cell_id;
      point.timestamps = days;
      point.draws.resize(2, static_cast<Eigen::Index>(days.size()));
      point.exceed_prob.resize(2, static_cast<Eigen::Index>(days.size()));
      for (std::size_t t = 0; t < days.size(); ++t) {
        auto k = cell.index_of(days[t]);
        if (k < 0)
          throw InputError("grid cell " + std::to_string(cell.cell_id) + " has no value on " +
                           format_iso_date(days[t]));
        double v = std::max(cell.values[static_cast<std::size_t>(k)] - held.threshold, 0.0);
        point.draws.col(static_cast<Eigen::Index>(t)).setConstant(v);
        point.exceed_prob.col(static_cast<Eigen::Index>(t)).setConstant(v > 0.0 ? 1.0 : 0.0);
      }
      SiteMetrics g = score_predictive(point, obs, options.cutoff);
      g.site = held.id;
      g.model = "grid";
      out.push_back(g);
    }
  }
  return out;
}

void write_metrics_csv(std::span<const SiteMetrics> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw InputError("cannot write " + path.string());
  out << "site,model,n_obs,n_exceed,converged,max_rhat,rmse,mae,crps,rmse_exceed,mae_exceed,"
         "crps_exceed,accuracy,precision,recall,specificity,f1\n";
  for (const auto& r : rows) {
    const auto& c = r.classification;
    out << r.site << ',' << r.model << ',' << r.n_obs << ',' << r.n_exceed << ','
        << (r.converged ? 1 : 0) << ',' << fmt(r.max_rhat) << ',' << fmt(r.rmse) << ','
        << fmt(r.mae) << ',' << fmt(r.crps) << ',' << fmt(r.rmse_exceed) << ','
        << fmt(r.mae_exceed) << ',' << fmt(r.crps_exceed) << ',' << fmt(c.accuracy) << ','
        << fmt(c.precision) << ',' << fmt(c.recall) << ',' << fmt(c.specificity) << ','
        << fmt(c.f1) << '\n';
  }
}

std::vector<QqRow> qq_table(const PredictiveDraws& p, std::span<const double> observed) {
  if (observed.size() != p.timestamps.size())
    throw InputError("observations do not match the prediction timestamps");
  std::vector<double> obs;
  for (double v : observed)
    if (!is_missing(v) && v > 0.0)
      obs.push_back(v);
  if (obs.size() < 10)
    throw InputError("Q-Q table needs at least 10 observed exceedances");
  std::sort(obs.begin(), obs.end());
  const std::size_t k = obs.size();
  std::vector<double> levels(k);
  for (std::size_t i = 0; i < k; ++i)
    levels[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(k);

  std::vector<double> pooled;
  std::vector<std::vector<double>> curves(k);
  for (Eigen::Index d = 0; d < p.draws.rows(); ++d) {
    std::vector<double> row;
    for (Eigen::Index t = 0; t < p.draws.cols(); ++t)
      if (p.draws(d, t) > 0.0)
        row.push_back(p.draws(d, t));
    pooled.insert(pooled.end(), row.begin(), row.end());
    if (row.size() < 2)
      continue;
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i < k; ++i)
      curves[i].push_back(quantile_sorted(row, levels[i]));
  }
  if (pooled.size() < 2)
    throw InputError("predictive has no exceedances to compare");
  std::sort(pooled.begin(), pooled.end());
  std::vector<QqRow> rows;
  for (std::size_t i = 0; i < k; ++i) {
    QqRow r;
    r.level = levels[i];
    r.observed = obs[i];
    r.predicted = quantile_sorted(pooled, levels[i]);
    std::sort(curves[i].begin(), curves[i].end());
    r.lower = curves[i].empty() ? r.predicted : quantile_sorted(curves[i], 0.025);
    r.upper = curves[i].empty() ? r.predicted : quantile_sorted(curves[i], 0.975);
    rows.push_back(r);
  }
  return rows;
}

void write_qq_csv(std::span<const QqRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw InputError("cannot write " + path.string());
  out << "level,observed,predicted,lower,upper\n";
  for (const auto& r : rows)
    out << fmt(r.level) << ',' << fmt(r.observed) << ',' << fmt(r.predicted) << ','
        << fmt(r.lower) << ',' << fmt(r.upper) << '\n';
}

} // namespace exdf
