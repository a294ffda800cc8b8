#include "exdf/scale_fit.hpp"

#include <algorithm>
#include <cmath>

#include "exdf/extremes.hpp"
#include "exdf/numeric.hpp"

namespace exdf {

ExceedanceRows exceedance_rows(const CubicBSplineBasis& basis, std::span<const int> timestamps,
                               std::span<const double> censored) {
  ExceedanceRows rows;
  for (std::size_t k = 0; k < timestamps.size(); ++k) {
    double z = censored[k];
    if (is_missing(z) || !(z > 0.0))
      continue;
    SparseBasisRow r;
    r.first = basis.evaluate_nonzero(timestamps[k], r.weight);
    rows.basis.push_back(r);
    rows.value.push_back(z);
  }
  return rows;
}

double gpd_sum_from_scaled(std::span<const double> eta, std::span<const double> scaled,
                           double xi) {
  double s = 0.0;
  if (std::abs(xi) < kShapeZeroTol) {
    for (std::size_t k = 0; k < eta.size(); ++k)
      s -= eta[k] + scaled[k];
    return s;
  }
  const double power = 1.0 / xi + 1.0;
  for (std::size_t k = 0; k < eta.size(); ++k) {
    double a = xi * scaled[k];
    if (a <= -1.0)
      return kNegInf;
    s -= eta[k] + power * std::log1p(a);
  }
  return s;
}

namespace {

struct RowTerms {
  double value;
  double d1;
  double d2;
};

// GPD log density in eta = log(scale) and its first two derivatives.
RowTerms row_terms(double z, double eta, double xi) {
  double b = z * std::exp(-eta);
  if (std::abs(xi) < kShapeZeroTol)
    return {-eta - b, -1.0 + b, -b};
  double q = 1.0 + xi * b;
  if (q <= 0.0)
    return {kNegInf, 0.0, 0.0};
  return {-eta - (1.0 / xi + 1.0) * std::log1p(xi * b), -1.0 + (1.0 + xi) * b / q,
          -(1.0 + xi) * b / (q * q)};
}

double objective(const ExceedanceRows& rows, double xi, const Eigen::VectorXd& coef,
                 const Eigen::VectorXd& mean, double var) {
  double f = -0.5 * (coef - mean).squaredNorm() / var;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    double v = row_terms(rows.value[k], rows.basis[k].dot(coef), xi).value;
    if (v == kNegInf)
      return kNegInf;
    f += v;
  }
  return f;
}

} // namespace

Eigen::VectorXd fit_log_scale_coefficients(const ExceedanceRows& rows, double xi,
                                           const Eigen::VectorXd& prior_mean, double prior_var,
                                           const Eigen::VectorXd* start) {
  const Eigen::Index m = prior_mean.size();
  Eigen::VectorXd coef = start ? *start : prior_mean;
  // Shift into the support: partition of unity moves every eta equally.
  if (xi < 0.0 && rows.size() > 0) {
    double deficit = kNegInf;
    for (std::size_t k = 0; k < rows.size(); ++k)
      deficit = std::max(deficit, std::log(rows.value[k] * -xi) - rows.basis[k].dot(coef));
    if (deficit > -0.1)
      coef.array() += deficit + 0.5;
  }
  double f = objective(rows, xi, coef, prior_mean, prior_var);
  Eigen::VectorXd g(m);
  Eigen::MatrixXd H(m, m);
  for (int iter = 0; iter < 200; ++iter) {
    g = -(coef - prior_mean) / prior_var;
    H = Eigen::MatrixXd::Identity(m, m) / prior_var;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = rows.basis[k];
      auto t = row_terms(rows.value[k], r.dot(coef), xi);
      for (int a = 0; a < 4; ++a) {
        g(r.first + a) += t.d1 * r.weight[static_cast<std::size_t>(a)];
        for (int b = 0; b < 4; ++b)
          H(r.first + a, r.first + b) -=
              t.d2 * r.weight[static_cast<std::size_t>(a)] * r.weight[static_cast<std::size_t>(b)];
      }
    }
    if (g.lpNorm<Eigen::Infinity>() < 1e-10)
      break;
    Eigen::VectorXd step = H.ldlt().solve(g);
    double t = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      Eigen::VectorXd trial = coef + t * step;
      double ft = objective(rows, xi, trial, prior_mean, prior_var);
      if (ft >= f) {
        coef = trial;
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved || (t * step).lpNorm<Eigen::Infinity>() < 1e-13)
      break;
  }
  return coef;
}

namespace {

// Profile log-likelihood of a constant-scale GPD at fixed shape.
double profile_constant_scale(const std::vector<double>& z, double xi) {
  if (z.empty())
    return 0.0;
  double eta = std::log(mean(z));
  double zmax = *std::max_element(z.begin(), z.end());
  if (xi < 0.0)
    eta = std::max(eta, std::log(zmax * -xi) + 0.5);
  auto total = [&](double e) {
    double s = 0.0;
    for (double v : z) {
      double t = row_terms(v, e, xi).value;
      if (t == kNegInf)
        return kNegInf;
      s += t;
    }
    return s;
  };
  double f = total(eta);
  for (int iter = 0; iter < 100; ++iter) {
    double g = 0.0, h = 0.0;
    for (double v : z) {
      auto t = row_terms(v, eta, xi);
      g += t.d1;
      h += t.d2;
    }
    if (std::abs(g) < 1e-10 || h >= 0.0)
      break;
    double step = -g / h;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      double ft = total(eta + t * step);
      if (ft >= f) {
        eta += t * step;
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved)
      break;
  }
  return f;
}

} // namespace

double pooled_shape_mle(std::span<const std::vector<double>> samples, double lo, double hi) {
  auto f = [&](double xi) {
    double s = 0.0;
    for (const auto& z : samples)
      s += profile_constant_scale(z, xi);
    return s;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60 && b - a > 1e-6; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return std::clamp(0.5 * (a + b), lo, hi);
}

} // namespace exdf
