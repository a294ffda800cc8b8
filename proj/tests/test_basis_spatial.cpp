#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "exdf/basis.hpp"
#include "exdf/error.hpp"
#include "exdf/rng.hpp"
#include "exdf/spatial.hpp"
#include "exdf/variogram.hpp"

using namespace exdf;

namespace {

// Recursive Cox-de Boor definition with 0/0 = 0.
double cox_de_boor(const std::vector<double>& u, int i, int p, double t) {
  if (p == 0)
    return (u[i] <= t && t < u[i + 1]) ? 1.0 : 0.0;
  double a = 0.0, b = 0.0;
  if (u[i + p] > u[i])
    a = (t - u[i]) / (u[i + p] - u[i]) * cox_de_boor(u, i, p - 1, t);
  if (u[i + p + 1] > u[i + 1])
    b = (u[i + p + 1] - t) / (u[i + p + 1] - u[i + 1]) * cox_de_boor(u, i + 1, p - 1, t);
  return a + b;
}

} // namespace

TEST_CASE("basis rows match the recursive definition") {
  CubicBSplineBasis basis(9, {10.0, 375.0});
  const auto& u = basis.knots();
  REQUIRE(u.size() == 13);
  for (double t = 10.0; t < 375.0; t += 3.7) {
    auto row = basis.evaluate(t);
    for (int i = 0; i < 9; ++i)
      CHECK(row(i) == doctest::Approx(cox_de_boor(u, i, 3, t)).epsilon(1e-12).scale(1.0));
  }
  auto end = basis.evaluate(375.0);
  CHECK(end(8) == doctest::Approx(1.0));
  CHECK(end.sum() == doctest::Approx(1.0));
  auto start = basis.evaluate(10.0);
  CHECK(start(0) == doctest::Approx(1.0));
}

TEST_CASE("basis is a nonnegative partition of unity") {
  std::vector<int> ts(365);
  std::iota(ts.begin(), ts.end(), 17897);
  for (int m : {4, 10, 60}) {
    auto B = build_basis(ts, m, {17897.0, 17897.0 + 364});
    CHECK(B.cols() == m);
    CHECK(B.minCoeff() >= 0.0);
    for (Eigen::Index r = 0; r < B.rows(); ++r)
      CHECK(B.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("smooth curves are reproduced by least squares") {
  std::vector<int> ts(365);
  std::iota(ts.begin(), ts.end(), 0);
  auto B = build_basis(ts, 30, {0.0, 364.0});
  Eigen::VectorXd f(365);
  for (int t = 0; t < 365; ++t)
    f(t) = std::sin(2.0 * M_PI * t / 365.0);
  Eigen::VectorXd coef = B.colPivHouseholderQr().solve(f);
  CHECK((B * coef - f).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("basis argument checks") {
  std::vector<int> ts{0, 1, 2};
  CHECK_THROWS_AS(build_basis(ts, 4, {0.0, 2.0}), InputError);
  CHECK_THROWS_AS(CubicBSplineBasis(3, {0.0, 1.0}), ConfigError);
  CubicBSplineBasis b(5, {0.0, 1.0});
  CHECK_THROWS_AS(b.evaluate(1.5), InputError);
}

TEST_CASE("exponential covariance") {
  std::vector<Location> locs{{0, 0}, {1, 0}};
  auto D = distance_matrix(locs);
  auto K = exp_covariance(D, 1.6, 2.0);
  CHECK(K(0, 1) == doctest::Approx(2.0 * 0.2018965180));
  CHECK(K(0, 0) == doctest::Approx(2.0 * (1.0 + 1e-8)).epsilon(1e-14));
  auto Kinf = exp_covariance(D, INFINITY, 1.0);
  CHECK(Kinf(0, 1) == 0.0);
  CHECK(Kinf(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("kriging weights on a two-site system") {
  std::vector<Location> sites{{0, 0}, {1, 0}};
  auto w = kriging_weights(sites, {0.5, 0}, 1.0);
  double r = std::exp(-1.0), k = std::exp(-0.5);
  CHECK(w.weights(0) == doctest::Approx(k / (1.0 + r)).epsilon(1e-7));
  CHECK(w.weights(1) == doctest::Approx(k / (1.0 + r)).epsilon(1e-7));
  CHECK(w.variance_factor == doctest::Approx(1.0 - 2.0 * k * k / (1.0 + r)).epsilon(1e-6));

  auto at_site = kriging_weights(sites, {1, 0}, 1.0);
  CHECK(at_site.weights(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(at_site.variance_factor < 1e-6);
}

TEST_CASE("variogram bins are invariant to site order") {
  Rng rng = make_rng(21);
  std::vector<Location> locs;
  std::vector<double> vals;
  for (int k = 0; k < 25; ++k) {
    locs.push_back({10.0 * uniform01(rng), 10.0 * uniform01(rng)});
    vals.push_back(standard_normal(rng));
  }
  auto bins = empirical_variogram(locs, vals, 8);
  REQUIRE(bins.size() == 8);
  std::size_t pairs = 0;
  for (const auto& b : bins)
    pairs += b.pair_count;
  CHECK(pairs == 25 * 24 / 2);

  std::vector<std::size_t> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Location> pl;
  std::vector<double> pv;
  for (auto k : perm) {
    pl.push_back(locs[k]);
    pv.push_back(vals[k]);
  }
  auto pbins = empirical_variogram(pl, pv, 8);
  for (std::size_t b = 0; b < 8; ++b) {
    CHECK(pbins[b].pair_count == bins[b].pair_count);
    CHECK(pbins[b].mean_distance == doctest::Approx(bins[b].mean_distance).epsilon(1e-12));
    CHECK(pbins[b].semivariance == doctest::Approx(bins[b].semivariance).epsilon(1e-12));
  }
}

TEST_CASE("flat variogram goes to the lower bound") {
  std::vector<Location> locs;
  std::vector<double> vals;
  for (int k = 0; k < 12; ++k) {
    locs.push_back({double(k), double(k % 3)});
    vals.push_back(4.0);
  }
  auto fit = fit_exponential_variogram(empirical_variogram(locs, vals, 8));
  CHECK(fit.at_bound);
  CHECK(fit.decay == doctest::Approx(1e-3));
}

TEST_CASE("exponential variogram fit recovers noise-free curves") {
  std::vector<VariogramBin> bins;
  ExponentialVariogram truth{3.0, 0.8, false};
  for (int k = 1; k <= 8; ++k) {
    double h = 0.5 * k;
    bins.push_back({h, truth.evaluate(h), 30});
  }
  auto fit = fit_exponential_variogram(bins);
  CHECK_FALSE(fit.at_bound);
  CHECK(fit.decay == doctest::Approx(0.8).epsilon(1e-5));
  CHECK(fit.sill == doctest::Approx(3.0).epsilon(1e-5));
}
