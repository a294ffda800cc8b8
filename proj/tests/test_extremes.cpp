#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "exdf/error.hpp"
#include "exdf/extremes.hpp"
#include "exdf/numeric.hpp"
#include "exdf/rng.hpp"

using namespace exdf;

namespace {

// Closed-form GPD density, written out independently of the library.
double gpd_density(double z, double s, double xi) {
  if (std::abs(xi) < 1e-12)
    return std::exp(-z / s) / s;
  return std::pow(1.0 + xi * z / s, -1.0 / xi - 1.0) / s;
}

} // namespace

TEST_CASE("gpd log density matches the closed form") {
  for (double xi : {-0.4, -0.1, 0.0, 0.2, 0.45})
    for (double s : {0.5, 2.0, 7.0})
      for (double z : {0.01, 0.3, 1.0, 2.5}) {
        GpdParams p{s, xi};
        if (z >= gpd_upper_endpoint(p))
          continue;
        CHECK(gpd_logpdf(z, p) == doctest::Approx(std::log(gpd_density(z, s, xi))).epsilon(1e-12));
      }
}

TEST_CASE("gpd outside the support is -inf") {
  CHECK(gpd_logpdf(-0.1, {1.0, 0.1}) == kNegInf);
  CHECK(gpd_logpdf(5.0, {1.0, -0.25}) == kNegInf); // endpoint 4
  CHECK(gpd_upper_endpoint({1.0, -0.25}) == doctest::Approx(4.0));
  CHECK(std::isinf(gpd_upper_endpoint({1.0, 0.1})));
}

TEST_CASE("tiny shapes use the exponential limit continuously") {
  GpdParams zero{2.0, 0.0};
  GpdParams tiny{2.0, 5e-9};
  GpdParams small{2.0, 1e-6};
  for (double z : {0.1, 1.0, 5.0}) {
    CHECK(gpd_logpdf(z, tiny) == doctest::Approx(gpd_logpdf(z, zero)).epsilon(1e-12));
    CHECK(gpd_logpdf(z, small) == doctest::Approx(gpd_logpdf(z, zero)).epsilon(1e-5));
    CHECK(gpd_cdf(z, small) == doctest::Approx(1.0 - std::exp(-z / 2.0)).epsilon(1e-5));
  }
}

TEST_CASE("quantile inverts the cdf") {
  Rng rng = make_rng(11);
  for (int k = 0; k < 2000; ++k) {
    GpdParams p{0.1 + 5.0 * uniform01(rng), -0.45 + 0.9 * uniform01(rng)};
    double q = uniform01(rng) * 0.999;
    double z = gpd_quantile(q, p);
    CHECK(gpd_cdf(z, p) == doctest::Approx(q).epsilon(1e-10));
  }
  CHECK(gpd_quantile(1.0, {1.0, -0.25}) == doctest::Approx(4.0));
  CHECK_THROWS_AS(gpd_quantile(1.0, {1.0, 0.1}), InputError);
}

TEST_CASE("delta-gpd log-likelihood") {
  DeltaGpdParams p{{2.0, 0.1}, 0.3};
  CHECK(dgpd_loglik(0.0, p) == doctest::Approx(std::log(0.7)));
  CHECK(dgpd_loglik(1.5, p) ==
        doctest::Approx(std::log(0.3) + std::log(gpd_density(1.5, 2.0, 0.1))));
  CHECK(dgpd_loglik(0.0, {{2.0, 0.1}, 1.0}) == kNegInf);
  CHECK(dgpd_loglik(1.0, {{2.0, 0.1}, 0.0}) == kNegInf);
  CHECK(dgpd_loglik(0.0, {{2.0, 0.1}, 0.0}) == 0.0);
}

TEST_CASE("delta-gpd sampler reproduces the point mass and tail") {
  Rng rng = make_rng(5);
  DeltaGpdParams p{{3.0, 0.2}, 0.4};
  const int n = 100000;
  int zeros = 0;
  int above = 0;
  for (int k = 0; k < n; ++k) {
    double z = dgpd_sample(p, rng);
    CHECK_FALSE(z < 0.0);
    zeros += z == 0.0;
    above += z > 3.0;
  }
  double tail = 0.4 * (1.0 - gpd_cdf(3.0, p.gpd));
  CHECK(zeros / double(n) == doctest::Approx(0.6).epsilon(0.02));
  CHECK(above / double(n) == doctest::Approx(tail).epsilon(0.05));
}

TEST_CASE("truncated laplace prior") {
  LaplacePrior prior{0.0, 0.05};
  // 1 / (2b (1 - exp(-0.5/b))) at the mode
  CHECK(laplace_logprior(0.0, prior) == doctest::Approx(std::log(10.000454)).epsilon(1e-7));
  CHECK(laplace_logprior(0.5, prior) == kNegInf);
  CHECK(laplace_logprior(-0.6, prior) == kNegInf);
  CHECK_THROWS_AS(laplace_logprior(0.0, {0.0, 0.0}), ConfigError);

  for (LaplacePrior pr : {LaplacePrior{0.0, 0.05}, LaplacePrior{0.1, 0.2}, LaplacePrior{-0.3, 1.0}}) {
    // midpoint rule over (-0.5, 0.5)
    const int k = 200000;
    CompensatedSum s;
    for (int j = 0; j < k; ++j)
      s += std::exp(laplace_logprior(-0.5 + (j + 0.5) / k, pr)) / k;
    CHECK(s.value() == doctest::Approx(1.0).epsilon(1e-6));
  }

  Rng rng = make_rng(8);
  LaplacePrior wide{0.2, 0.5};
  double below = 0.0;
  const int n = 50000;
  for (int j = 0; j < n; ++j) {
    double x = laplace_sample(wide, rng);
    CHECK(std::abs(x) < 0.5);
    below += x < 0.2;
  }
  // P(X < 0.2) = (F(0.2) - F(-0.5)) / (F(0.5) - F(-0.5)) for the untruncated law
  auto F = [&](double x) {
    return x < 0.2 ? 0.5 * std::exp((x - 0.2) / 0.5) : 1.0 - 0.5 * std::exp(-(x - 0.2) / 0.5);
  };
  double expected = (F(0.2) - F(-0.5)) / (F(0.5) - F(-0.5));
  CHECK(below / n == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("logistic helpers are stable") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logit(logistic(1.7)) == doctest::Approx(1.7));
  CHECK(log_logistic(-800.0) == doctest::Approx(-800.0));
  CHECK(log1m_logistic(800.0) == doctest::Approx(-800.0));
  CHECK(log_logistic(2.0) == doctest::Approx(std::log(1.0 / (1.0 + std::exp(-2.0)))));
  CHECK(log1m_logistic(2.0) == doctest::Approx(std::log(1.0 - 1.0 / (1.0 + std::exp(-2.0)))));
}

TEST_CASE("normal and inverse-gamma log densities") {
  CHECK(normal_logpdf(1.0, 0.0, 4.0) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * 4.0) - 1.0 / 8.0));
  // 1/s2 ~ Gamma(3, 2): p(s2) = 2^3/Gamma(3) s2^-4 exp(-2/s2)
  double s2 = 0.7;
  double expected = std::log(8.0 / 2.0) - 4.0 * std::log(s2) - 2.0 / s2;
  CHECK(inverse_variance_gamma_logpdf(s2, {3.0, 2.0}) == doctest::Approx(expected));
  CHECK(inverse_variance_gamma_logpdf(-1.0, {3.0, 2.0}) == kNegInf);
}

TEST_CASE("compensated summation and quantiles") {
  CompensatedSum s;
  s += 1e16;
  s += 1.0;
  s += -1e16;
  CHECK(s.value() == 1.0);

  std::vector<double> v;
  for (int k = 1; k <= 100; ++k)
    v.push_back(k);
  CHECK(quantile(v, 0.8) == doctest::Approx(80.2));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 100.0);
  std::vector<double> w{3.0, NAN, 1.0, 2.0};
  CHECK(quantile(w, 0.5) == 2.0);
  CHECK(sample_variance(std::vector<double>{1.0, 2.0, 3.0, 4.0}) == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a = make_rng(42, 3, 1);
  Rng b = make_rng(42, 3, 1);
  Rng c = make_rng(42, 4, 1);
  auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(stream_seed(1, 0) != stream_seed(2, 0));
}
