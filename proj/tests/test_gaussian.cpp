#include <doctest.h>

#include <cmath>
#include <vector>

#include "exdf/gaussian.hpp"
#include "exdf/numeric.hpp"
#include "fixtures.hpp"

using namespace exdf;

TEST_CASE("variance conditional on three residuals") {
  // residuals 1, -2, 0.5: ssr = 5.25
  auto post = sigma2_conditional({2.0, 1.0}, 3.0, 1.0 + 4.0 + 0.25);
  CHECK(post.shape == 3.5);
  CHECK(post.rate == 3.625);
}

TEST_CASE("canonical normal draws") {
  Eigen::MatrixXd P(2, 2);
  P << 2.0, 0.6, 0.6, 1.0;
  Eigen::VectorXd b(2);
  b << 1.0, -1.0;
  Eigen::MatrixXd S = P.inverse();
  Eigen::VectorXd mu = S * b;
  Rng rng = make_rng(4);
  const int n = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(2, 2);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd x = sample_canonical_normal(P, b, rng);
    sum += x;
    sq += (x - mu) * (x - mu).transpose();
  }
  Eigen::VectorXd m = sum / n;
  Eigen::MatrixXd C = sq / n;
  CHECK(m(0) == doctest::Approx(mu(0)).epsilon(0.02).scale(1.0));
  CHECK(m(1) == doctest::Approx(mu(1)).epsilon(0.02).scale(1.0));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(C(i, j) == doctest::Approx(S(i, j)).epsilon(0.03).scale(1.0));
}

TEST_CASE("gaussian state flattening") {
  GaussianState s;
  s.c = Eigen::MatrixXd::Random(2, 4);
  s.d = Eigen::MatrixXd::Random(2, 4);
  s.alpha = Eigen::MatrixXd::Random(2, 4);
  s.beta = Eigen::MatrixXd::Random(2, 4);
  s.sigma2_y = 3.0;
  s.sigma2_beta = 0.2;
  auto v = flatten(s);
  CHECK(v.size() == static_cast<Eigen::Index>(ParameterLayout::gaussian(2, 4).size()));
  auto back = unflatten_gaussian(v, 2, 4);
  CHECK(back.c == s.c);
  CHECK(back.beta == s.beta);
  CHECK(back.sigma2_y == 3.0);
  CHECK(back.sigma2_beta == 0.2);
}

TEST_CASE("gibbs sampler recovers the observation variances") {
  SyntheticScenario sc;
  sc.generator = Generator::gaussian;
  sc.n_sites = 4;
  sc.n_days = 365;
  sc.seed = 2;
  auto s = test::synthesize(sc);
  auto data = prepare_gaussian_data(s.pairs, 10);
  CHECK(data.d_center == doctest::Approx(sc.gauss_level).epsilon(0.2));
  // raw-scale levels need a vague d prior
  ModelSpec spec;
  spec.m = 10;
  spec.phi_alpha = sc.spec.phi_alpha;
  spec.phi_beta = sc.spec.phi_beta;
  auto a = fit_gaussian(data, spec, McmcSettings{3000, 1000, 2, 2, 1});
  const auto& g = a.layout.group("sigma2_y");
  std::vector<double> s2y;
  std::vector<double> s2x;
  for (const auto& chain : a.chains)
    for (Eigen::Index k = 0; k < chain.rows(); ++k) {
      s2y.push_back(chain(k, static_cast<Eigen::Index>(g.offset)));
      s2x.push_back(chain(k, static_cast<Eigen::Index>(a.layout.group("sigma2_x").offset)));
    }
  CHECK(mean(s2y) == doctest::Approx(sc.gauss_sigma2_y).epsilon(0.25));
  CHECK(mean(s2x) == doctest::Approx(sc.gauss_sigma2_x).epsilon(0.25));

  auto b = fit_gaussian(data, spec, McmcSettings{3000, 1000, 2, 2, 1});
  CHECK(a.chains[0] == b.chains[0]);
}
