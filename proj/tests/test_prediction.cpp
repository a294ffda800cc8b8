#include <doctest.h>

#include <cmath>
#include <vector>

#include "exdf/error.hpp"
#include "exdf/extremes.hpp"
#include "exdf/mcmc.hpp"
#include "exdf/metrics.hpp"
#include "exdf/predict.hpp"
#include "exdf/rng.hpp"
#include "exdf/validation.hpp"
#include "fixtures.hpp"

using namespace exdf;

namespace {

double crps_pairs(const std::vector<double>& x, double y) {
  double a = 0.0, b = 0.0;
  for (double xi : x) {
    a += std::abs(xi - y);
    for (double xj : x)
      b += std::abs(xi - xj);
  }
  double n = static_cast<double>(x.size());
  return a / n - 0.5 * b / (n * n);
}

struct Fitted {
  test::Synthetic syn;
  PosteriorArchive archive;
};

const Fitted& fitted() {
  static const Fitted f = [] {
    SyntheticScenario sc;
    sc.n_sites = 3;
    sc.n_cells = 9;
    sc.n_days = 120;
    sc.seed = 4;
    Fitted out{test::synthesize(sc), {}};
    out.archive = run_mcmc(prepare_fusion_data(out.syn.pairs, sc.spec.m), sc.spec,
                           McmcSettings{1500, 500, 10, 2, 2});
    return out;
  }();
  return f;
}

} // namespace

TEST_CASE("crps") {
  std::vector<double> two{0.0, 2.0};
  CHECK(crps(two, 1.0) == 0.5);
  std::vector<double> same{3.0, 3.0};
  CHECK(crps(same, 1.0) == 2.0);
  CHECK(crps(same, 3.0) == 0.0);
  std::vector<double> one{3.0};
  CHECK_THROWS_AS(crps(one, 1.0), InputError);
  Rng rng = make_rng(3);
  std::vector<double> x;
  for (int k = 0; k < 301; ++k)
    x.push_back(k % 4 ? standard_normal(rng) : 0.0);
  for (double y : {-1.0, 0.0, 0.3, 2.0})
    CHECK(crps(x, y) == doctest::Approx(crps_pairs(x, y)).epsilon(1e-12));
}

TEST_CASE("point error metrics") {
  std::vector<double> p{1.0, 2.0, 4.0};
  std::vector<double> o{1.0, 4.0, 1.0};
  CHECK(rmse(p, o) == doctest::Approx(std::sqrt(13.0 / 3.0)).epsilon(1e-12));
  CHECK(mae(p, o) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("classification metrics") {
  std::vector<double> prob{0.9, 0.8, 0.7, 0.1, 0.2, 0.3, 0.1, 0.0, 0.4, 0.45};
  std::vector<int> obs{1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
  auto m = classification_metrics(prob, obs, 0.5);
  CHECK(m.counts.tp == 2);
  CHECK(m.counts.fp == 1);
  CHECK(m.counts.fn == 1);
  CHECK(m.counts.tn == 6);
  CHECK(*m.accuracy == 8.0 / 10.0);
  CHECK(*m.precision == 2.0 / 3.0);
  CHECK(*m.recall == 2.0 / 3.0);
  CHECK(*m.specificity == 6.0 / 7.0);
  CHECK(*m.f1 == 2.0 / 3.0);

  auto none = classification_metrics(ConfusionMatrix{0, 0, 0, 5});
  CHECK(*none.accuracy == 1.0);
  CHECK_FALSE(none.precision.has_value());
  CHECK_FALSE(none.recall.has_value());
  CHECK_FALSE(none.f1.has_value());
  CHECK(*none.specificity == 1.0);
}

TEST_CASE("surface statistics") {
  PredictiveDraws p;
  p.timestamps = {0, 1, 2};
  p.draws.resize(2, 3);
  p.draws << 1, 1, 0, 1, 0, 1;
  CHECK(surface_value(p, SurfaceStatistic::expected_shortfall) == 1.0);
  CHECK(surface_value(p, SurfaceStatistic::exceedance_range) == 0.0);
  p.draws << 2, 6, 0, 0, 3, 7;
  CHECK(surface_value(p, SurfaceStatistic::expected_shortfall) == 4.5);
  CHECK(surface_value(p, SurfaceStatistic::exceedance_range) == 4.0);
  p.draws.setZero();
  CHECK(std::isnan(surface_value(p, SurfaceStatistic::expected_shortfall)));
  CHECK(parse_surface_statistic("range") == SurfaceStatistic::exceedance_range);
  CHECK_THROWS_AS(parse_surface_statistic("median"), ConfigError);
}

TEST_CASE("gp conditional and inverse distance weighting") {
  std::vector<Location> sites{{0, 0}, {1, 0}};
  Eigen::VectorXd v(2);
  v << 2.0, 4.0;
  auto g = gp_conditional(sites, v, 1.0, 2.0, 1.0, {0.5, 0});
  double w = std::exp(-0.5) / (1.0 + std::exp(-1.0));
  CHECK(g.mean == doctest::Approx(1.0 + w * (1.0 + 3.0)).epsilon(1e-7));
  CHECK(g.variance == doctest::Approx(2.0 * (1.0 - 2.0 * w * std::exp(-0.5))).epsilon(1e-6));

  Eigen::MatrixXd rows(2, 1);
  rows << 10.0, 20.0;
  auto avg = idw_average(sites, rows, {-1, 0});
  CHECK(avg(0) == doctest::Approx(0.8 * 10.0 + 0.2 * 20.0));
  CHECK(idw_average(sites, rows, {1, 0})(0) == 20.0);
}

TEST_CASE("prediction at a fitted site reuses its own coefficients") {
  const auto& f = fitted();
  const auto& pair = f.syn.pairs[1];
  const auto& ts = pair.station.timestamps;
  PredictOptions opt;
  opt.max_draws = 50;
  auto p = predict(f.archive, pair.station.location, ts, f.syn.data.grid, opt);
  REQUIRE(p.n_draws() == 50);
  CHECK(p.cell_id == pair.grid.cell_id);
  CHECK(p.draws.minCoeff() >= 0.0);
  auto pooled = f.archive.pooled_draws(50);
  auto lambda = f.archive.layout.group("lambda");
  for (std::size_t k = 0; k < 50; k += 7) {
    Eigen::RowVectorXd l(4);
    for (int j = 0; j < 4; ++j)
      l(j) = pooled[k](static_cast<Eigen::Index>(lambda.offset + 4 + j));
    for (Eigen::Index t = 0; t < 20; ++t)
      CHECK(p.exceed_prob(static_cast<Eigen::Index>(k), t) ==
            doctest::Approx(logistic(pair.W.row(t).dot(l))).epsilon(1e-12));
  }
  auto again = predict(f.archive, pair.station.location, ts, f.syn.data.grid, opt);
  CHECK(again.draws == p.draws);
  opt.stream = 1;
  CHECK(predict(f.archive, pair.station.location, ts, f.syn.data.grid, opt).draws != p.draws);
}

TEST_CASE("prediction away from sites and surfaces") {
  const auto& f = fitted();
  PredictOptions opt;
  opt.max_draws = 40;
  const auto& cell = f.syn.data.grid[0];
  auto p = predict(f.archive, cell.centroid, cell.timestamps, f.syn.data.grid, opt);
  CHECK(p.cell_id == cell.cell_id);
  CHECK(p.draws.allFinite());
  auto mean = p.mean();
  auto prob = p.mean_exceed_prob();
  auto q = p.quantile(0.5);
  CHECK(mean.size() == cell.timestamps.size());
  for (std::size_t t = 0; t < mean.size(); ++t) {
    CHECK(prob[t] >= 0.0);
    CHECK(prob[t] <= 1.0);
    CHECK(q[t] >= 0.0);
  }
  auto rows = shortfall_surface(f.archive, f.syn.data.grid, SurfaceStatistic::expected_shortfall,
                                opt);
  CHECK(rows.size() == f.syn.data.grid.size());
  for (const auto& r : rows)
    CHECK((std::isnan(r.value) || r.value > 0.0));
}

TEST_CASE("scoring, coverage and q-q tables") {
  const auto& f = fitted();
  const auto& pair = f.syn.pairs[0];
  PredictOptions opt;
  opt.max_draws = 100;
  auto p = predict(f.archive, pair.station.location, pair.station.timestamps, f.syn.data.grid,
                   opt);
  auto m = score_predictive(p, pair.station.censored);
  CHECK(m.n_obs == pair.station.censored.size());
  CHECK(m.crps >= 0.0);
  CHECK(m.rmse >= m.mae);
  auto cov = interval_coverage(p, pair.station.censored, 0.95);
  CHECK(cov >= 0.0);
  CHECK(cov <= 1.0);

  std::size_t positives = 0;
  for (double v : pair.station.censored)
    positives += v > 0.0;
  if (positives >= 10) {
    auto qq = qq_table(p, pair.station.censored);
    CHECK(qq.size() == positives);
    for (std::size_t k = 1; k < qq.size(); ++k) {
      CHECK(qq[k].observed >= qq[k - 1].observed);
      CHECK(qq[k].predicted >= qq[k - 1].predicted);
    }
    for (const auto& r : qq)
      CHECK(r.lower <= r.upper);
  }
  std::vector<double> few(pair.station.censored.size(), 0.0);
  CHECK_THROWS_AS(qq_table(p, few), InputError);
}

TEST_CASE("leave-one-site-out produces one row per site and model") {
  const auto& f = fitted();
  LosoOptions opt;
  opt.settings = McmcSettings{400, 200, 10, 1, 3};
  opt.predict.max_draws = 20;
  auto spec = f.archive.spec;
  auto rows = loso_cv(f.syn.pairs, f.syn.data.grid, spec, opt);
  REQUIRE(rows.size() == 2 * f.syn.pairs.size());
  std::size_t grid_rows = 0;
  for (const auto& r : rows) {
    grid_rows += r.model == "grid";
    CHECK(std::isfinite(r.rmse));
    CHECK(r.crps >= 0.0);
  }
  CHECK(grid_rows == f.syn.pairs.size());
}
