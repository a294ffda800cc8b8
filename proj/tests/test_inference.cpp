#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "exdf/archive.hpp"
#include "exdf/diagnostics.hpp"
#include "exdf/error.hpp"
#include "exdf/mcmc.hpp"
#include "exdf/posterior.hpp"
#include "exdf/sampler.hpp"
#include "fixtures.hpp"

using namespace exdf;

namespace {

SyntheticScenario small_scenario(int n_sites, int m, std::uint64_t seed) {
  SyntheticScenario sc;
  sc.n_sites = n_sites;
  sc.n_cells = 4;
  sc.n_days = 60;
  sc.spec.m = m;
  sc.seed = seed;
  return sc;
}

double log_norm(double x, double mu, double v) {
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - (x - mu) * (x - mu) / (2.0 * v);
}

double log_gpd(double z, double s, double xi) {
  return -std::log(s) - (1.0 / xi + 1.0) * std::log1p(xi * z / s);
}

double log_inv_gamma(double s2, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(s2) - b / s2;
}

double log_laplace(double x, double b) {
  return -std::abs(x) / b - std::log(2.0 * b * (1.0 - std::exp(-0.5 / b)));
}

// Kolmogorov-Smirnov distance of a sample to a N(0, v) law.
double ks_normal(std::vector<double> x, double v) {
  std::sort(x.begin(), x.end());
  double n = static_cast<double>(x.size()), d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double F = 0.5 * std::erfc(-x[k] / std::sqrt(2.0 * v));
    d = std::max({d, std::abs(F - k / n), std::abs(F - (k + 1) / n)});
  }
  return d;
}

} // namespace

TEST_CASE("log posterior matches a plain summation on one site") {
  auto sc = small_scenario(1, 4, 3);
  auto s = test::synthesize(sc);
  const auto& spec = sc.spec;
  auto data = prepare_fusion_data(s.pairs, 4);
  ParameterState st = initial_state(data, spec);
  st.alpha(0, 1) = 0.3;
  st.beta(0, 2) = 1.4;
  st.lambda(0, 3) = 0.7;
  st.xi_y = 0.12;
  st.xi_x = -0.05;
  st.sigma2_c = 0.8;
  st.sigma2_alpha = 1.3;
  st.sigma2_beta = 0.6;

  const auto& site = data.sites[0];
  double y = 0.0;
  for (std::size_t j = 0; j < site.y.size(); ++j) {
    auto jj = static_cast<Eigen::Index>(j);
    double sigma = std::exp(site.phi.row(jj).dot(st.c.row(0)));
    double p = 1.0 / (1.0 + std::exp(-site.W.row(jj).dot(st.lambda.row(0))));
    y += site.y[j] > 0.0 ? std::log(p) + log_gpd(site.y[j], sigma, st.xi_y) : std::log(1.0 - p);
  }
  double x = 0.0;
  for (std::size_t k = 0; k < site.x.size(); ++k)
    if (site.x[k] > 0.0)
      x += log_gpd(site.x[k], std::exp(site.psi.row(static_cast<Eigen::Index>(k)).dot(st.d.row(0))),
                   st.xi_x);
  double rest = 0.0;
  auto mu_d = spec.d_prior_mean();
  for (int r = 0; r < 4; ++r) {
    rest += log_norm(st.c(0, r), st.alpha(0, r) + st.beta(0, r) * st.d(0, r), st.sigma2_c);
    rest += log_norm(st.d(0, r), mu_d(r), spec.kappa_d);
    rest += log_norm(st.alpha(0, r), 0.0, st.sigma2_alpha * (1.0 + 1e-8));
    rest += log_norm(st.beta(0, r), 1.0, st.sigma2_beta * (1.0 + 1e-8));
  }
  for (int l = 0; l < 4; ++l)
    rest += log_norm(st.lambda(0, l), spec.mu_lambda[l], spec.sigma2_lambda[l]);
  rest += log_laplace(st.xi_y, 0.05) + log_laplace(st.xi_x, 0.05);
  rest += log_inv_gamma(st.sigma2_c, spec.precision_c.shape, spec.precision_c.rate);
  rest += log_inv_gamma(st.sigma2_alpha, spec.precision_alpha.shape, spec.precision_alpha.rate);
  rest += log_inv_gamma(st.sigma2_beta, spec.precision_beta.shape, spec.precision_beta.rate);

  auto terms = log_posterior_terms(st, data, spec);
  CHECK(terms.y_loglik[0] == doctest::Approx(y).epsilon(1e-10));
  CHECK(terms.x_loglik[0] == doctest::Approx(x).epsilon(1e-10));
  CHECK(terms.total() == doctest::Approx(y + x + rest).epsilon(1e-10));

  st.xi_y = 0.6;
  CHECK(log_posterior(st, data, spec) == kNegInf);
}

TEST_CASE("site likelihoods are additive across sites") {
  auto sc = small_scenario(2, 5, 4);
  auto s = test::synthesize(sc);
  auto both = prepare_fusion_data(s.pairs, 5);
  ParameterState st = initial_state(both, sc.spec);
  for (int i = 0; i < 2; ++i) {
    std::vector<CollocatedPair> one{s.pairs[static_cast<std::size_t>(i)]};
    auto single = prepare_fusion_data(one, 5, both.domain);
    ParameterState si = ParameterState::zeros(1, 5);
    si.c = st.c.row(i);
    si.d = st.d.row(i);
    si.alpha = st.alpha.row(i);
    si.beta = st.beta.row(i);
    si.lambda = st.lambda.row(i);
    si.xi_y = st.xi_y;
    si.xi_x = st.xi_x;
    auto a = log_posterior_terms(st, both, sc.spec);
    auto b = log_posterior_terms(si, single, sc.spec);
    CHECK(a.y_loglik[static_cast<std::size_t>(i)] == doctest::Approx(b.y_loglik[0]).epsilon(1e-12));
    CHECK(a.x_loglik[static_cast<std::size_t>(i)] == doctest::Approx(b.x_loglik[0]).epsilon(1e-12));
  }
}

TEST_CASE("state flattening round trips") {
  ParameterState st = ParameterState::zeros(3, 5);
  Rng rng = make_rng(2);
  for (auto* M : {&st.c, &st.d, &st.alpha, &st.beta, &st.lambda})
    for (Eigen::Index k = 0; k < M->size(); ++k)
      M->data()[k] = standard_normal(rng);
  st.xi_y = 0.1;
  st.sigma2_beta = 2.5;
  auto v = flatten(st);
  auto layout = ParameterLayout::exdf(3, 5);
  CHECK(v.size() == static_cast<Eigen::Index>(layout.size()));
  auto back = unflatten_state(v, 3, 5);
  CHECK(back.c == st.c);
  CHECK(back.lambda == st.lambda);
  CHECK(back.sigma2_beta == 2.5);
  CHECK(v(static_cast<Eigen::Index>(layout.group("c").offset) + 1) == st.c(0, 1));
  CHECK(layout.element_name(layout.group("c").offset + 6) == "c[1,1]");
  CHECK(layout.element_name(layout.group("xi_y").offset) == "xi_y");
}

TEST_CASE("sampler caches agree with the full posterior") {
  auto sc = small_scenario(3, 6, 5);
  auto s = test::synthesize(sc);
  auto data = prepare_fusion_data(s.pairs, 6);
  Rng rng = make_rng(9);
  auto start = randomize_start(initial_state(data, sc.spec), data, sc.spec, rng);
  CHECK(std::isfinite(log_posterior(start, data, sc.spec)));
  ExdfSampler sampler(data, sc.spec, start);
  for (int k = 0; k < 300; ++k) {
    sampler.sweep(rng, k < 200, k > 50);
    if (k % 50 == 0 || k == 299) {
      const auto& st = sampler.state();
      double expected = log_posterior(st, data, sc.spec) + std::log(st.sigma2_c) +
                        std::log(st.sigma2_alpha) + std::log(st.sigma2_beta);
      CHECK(sampler.log_target() == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("adaptation stops at freeze") {
  AdaptiveProposal p("b", 3, 0.5, AdaptiveProposal::default_target(3));
  CHECK(p.target_accept() == 0.25);
  CHECK(AdaptiveProposal::default_target(1) == 0.44);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  for (int k = 0; k < 50; ++k)
    p.record(true, x, true, false);
  CHECK(p.step_scale() > 0.5);
  p.freeze();
  double frozen = p.step_scale();
  Eigen::MatrixXd L = p.shape_cholesky();
  Rng rng = make_rng(1);
  for (int k = 0; k < 500; ++k) {
    x = p.propose(x, rng);
    p.record(k % 3 == 0, x, true, true);
  }
  CHECK(p.step_scale() == frozen);
  CHECK(p.shape_cholesky() == L);
  CHECK(p.proposals() == 500);
  CHECK(p.acceptance_rate() == doctest::Approx(167.0 / 500.0));
}

TEST_CASE("random walk targets the right distribution") {
  auto target = [](const Eigen::VectorXd& v) { return -0.5 * v(0) * v(0) - v(1) * v(1) / 8.0; };
  Rng rng = make_rng(77);
  auto res = run_random_walk(target, Eigen::VectorXd::Constant(2, 3.0), 220000, 20000, 20, rng);
  const auto n = res.draws.rows();
  REQUIRE(n == 10000);
  std::vector<double> a(res.draws.col(0).data(), res.draws.col(0).data() + n);
  std::vector<double> b(res.draws.col(1).data(), res.draws.col(1).data() + n);
  // 0.1% Kolmogorov critical value, inflated for residual autocorrelation
  double crit = 2.0 * 1.95 / std::sqrt(static_cast<double>(n));
  CHECK(ks_normal(a, 1.0) < crit);
  CHECK(ks_normal(b, 4.0) < crit);
  CHECK(res.acceptance_rate == doctest::Approx(0.25).epsilon(0.3));
}

TEST_CASE("split R-hat") {
  std::vector<std::vector<double>> chains(2);
  for (int k = 0; k < 20; ++k) {
    chains[0].push_back(k % 2 ? 1.0 : -1.0);
    chains[1].push_back(k % 2 ? 11.0 : 9.0);
  }
  // halves of 10: W = 10/9, B = 10 * var{0, 0, 10, 10} = 1000/3
  double w = 10.0 / 9.0, b = 1000.0 / 3.0;
  double expected = std::sqrt((0.9 * w + b / 10.0) / w);
  auto r = split_rhat(chains);
  CHECK_FALSE(r.degenerate);
  CHECK(r.value == doctest::Approx(expected).epsilon(1e-12));

  std::vector<std::vector<double>> same(2);
  for (int k = 0; k < 21; ++k) {
    double v = (k / 3) % 2 ? 1.0 : 0.0;
    same[0].push_back(v);
    same[1].push_back(v);
  }
  same[0][10] = same[1][10] = 100.0; // middle draw is dropped
  CHECK(split_rhat(same).value < 1.1);

  std::vector<std::vector<double>> flat(2, std::vector<double>(12, 1.0));
  auto d = split_rhat(flat);
  CHECK(d.degenerate);
  CHECK(std::isnan(d.value));

  std::vector<std::vector<double>> one(1, std::vector<double>(20, 0.0));
  CHECK_THROWS_AS(split_rhat(one), InputError);
  std::vector<std::vector<double>> short_chains(2, std::vector<double>(9, 0.0));
  CHECK_THROWS_AS(split_rhat(short_chains), InputError);
}

TEST_CASE("mcmc is reproducible and independent of the thread count") {
  auto sc = small_scenario(3, 5, 6);
  auto s = test::synthesize(sc);
  auto data = prepare_fusion_data(s.pairs, 5);
  McmcSettings settings{800, 300, 5, 2, 12};
  setenv("EXDF_THREADS", "1", 1);
  auto a = run_mcmc(data, sc.spec, settings);
  setenv("EXDF_THREADS", "2", 1);
  auto b = run_mcmc(data, sc.spec, settings);
  unsetenv("EXDF_THREADS");
  REQUIRE(a.n_chains() == 2);
  CHECK(a.draws_per_chain() == 100);
  CHECK(a.chains[0] == b.chains[0]);
  CHECK(a.chains[1] == b.chains[1]);
  CHECK(a.chains[0] != a.chains[1]);
  settings.seed = 13;
  auto c = run_mcmc(data, sc.spec, settings);
  CHECK(c.chains[0] != a.chains[0]);
  auto groups = group_rhat(a);
  CHECK(groups.size() == a.layout.groups.size());
}

TEST_CASE("archive round trip") {
  auto sc = small_scenario(2, 4, 8);
  auto s = test::synthesize(sc);
  auto data = prepare_fusion_data(s.pairs, 4);
  auto a = run_mcmc(data, sc.spec, McmcSettings{300, 100, 4, 2, 3});
  a.warnings.push_back("note");
  auto path = std::filesystem::temp_directory_path() / "exdf_test_archive.bin";
  write_archive(a, path);
  auto b = read_archive(path);
  CHECK(b.model == a.model);
  CHECK(b.chains == a.chains);
  CHECK(b.sites.size() == a.sites.size());
  CHECK(b.sites[1].id == a.sites[1].id);
  CHECK(b.sites[1].location.easting_km == a.sites[1].location.easting_km);
  CHECK(b.spec.mu_d == a.spec.mu_d);
  CHECK(b.spec.phi_alpha == a.spec.phi_alpha);
  CHECK(b.domain.t_min == a.domain.t_min);
  CHECK(b.layout.size() == a.layout.size());
  CHECK(b.warnings == a.warnings);
  CHECK(b.blocks.size() == a.blocks.size());
  auto path2 = path;
  path2 += ".copy";
  write_archive(b, path2);
  CHECK(file_checksum(path) == file_checksum(path2));
  CHECK(file_checksum(path).size() == 16);

  {
    std::ofstream bad(path2, std::ios::binary | std::ios::trunc);
    bad << "NOTANARCHIVE";
  }
  CHECK_THROWS_AS(read_archive(path2), InputError);
}
