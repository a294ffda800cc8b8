#include "exdf/model.hpp"

#include <cmath>

#include "exdf/error.hpp"

namespace exdf {

Eigen::VectorXd ModelSpec::d_prior_mean() const {
  if (mu_d.empty())
    return Eigen::VectorXd::Zero(m);
  if (mu_d.size() == 1)
    return Eigen::VectorXd::Constant(m, mu_d.front());
  if (static_cast<int>(mu_d.size()) != m)
    throw ConfigError("mu_d must have 1 or m entries");
  return Eigen::Map<const Eigen::VectorXd>(mu_d.data(), m);
}

void ModelSpec::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(std::string(what) + " must be positive");
  };
  if (m < 4)
    throw ConfigError("basis dimension m must be at least 4");
  positive(phi_alpha, "phi_alpha");
  positive(phi_beta, "phi_beta");
  positive(shape_prior_y.scale, "b_y");
  positive(shape_prior_x.scale, "b_x");
  if (!(std::abs(shape_prior_y.location) < 0.5) || !(std::abs(shape_prior_x.location) < 0.5))
    throw ConfigError("shape prior locations must lie in (-0.5, 0.5)");
  for (const auto* g : {&precision_alpha, &precision_beta, &precision_c, &precision_obs_y,
                        &precision_obs_x}) {
    positive(g->shape, "gamma prior shape");
    positive(g->rate, "gamma prior rate");
  }
  positive(kappa_d, "kappa_d");
  for (double s : sigma2_lambda)
    positive(s, "sigma2_lambda");
  for (double mu : mu_lambda)
    if (!std::isfinite(mu))
      throw ConfigError("mu_lambda must be finite");
  Eigen::VectorXd md = d_prior_mean();
  if (!md.allFinite())
    throw ConfigError("mu_d must be finite");
}

ParameterState ParameterState::zeros(int n, int m) {
  ParameterState s;
  s.c = Eigen::MatrixXd::Zero(n, m);
  s.d = Eigen::MatrixXd::Zero(n, m);
  s.alpha = Eigen::MatrixXd::Zero(n, m);
  s.beta = Eigen::MatrixXd::Ones(n, m);
  s.lambda = Eigen::MatrixXd::Zero(n, 4);
  return s;
}

std::size_t ParameterLayout::size() const {
  return groups.empty() ? 0 : groups.back().offset + groups.back().size;
}

const ParameterGroup& ParameterLayout::group(const std::string& name) const {
  for (const auto& g : groups)
    if (g.name == name)
      return g;
  throw InputError("unknown parameter group '" + name + "'");
}

std::string ParameterLayout::element_name(std::size_t index) const {
  for (const auto& g : groups) {
    if (index < g.offset || index >= g.offset + g.size)
      continue;
    if (g.size == 1)
      return g.name;
    std::size_t k = index - g.offset;
    return g.name + "[" + std::to_string(k / static_cast<std::size_t>(g.cols)) + "," +
           std::to_string(k % static_cast<std::size_t>(g.cols)) + "]";
  }
  throw InputError("parameter index out of range");
}

namespace {

void add_group(ParameterLayout& L, const std::string& name, int rows, int cols) {
  std::size_t offset = L.size();
  L.groups.push_back({name, offset, static_cast<std::size_t>(rows * cols), rows, cols});
}

} // namespace

ParameterLayout ParameterLayout::exdf(int n, int m) {
  ParameterLayout L;
  add_group(L, "c", n, m);
  add_group(L, "d", n, m);
  add_group(L, "alpha", n, m);
  add_group(L, "beta", n, m);
  add_group(L, "lambda", n, 4);
  for (const char* s : {"xi_y", "xi_x", "sigma2_c", "sigma2_alpha", "sigma2_beta"})
    add_group(L, s, 1, 1);
  return L;
}

ParameterLayout ParameterLayout::gaussian(int n, int m) {
  ParameterLayout L;
  add_group(L, "c", n, m);
  add_group(L, "d", n, m);
  add_group(L, "alpha", n, m);
  add_group(L, "beta", n, m);
  for (const char* s : {"sigma2_y", "sigma2_x", "sigma2_c", "sigma2_alpha", "sigma2_beta"})
    add_group(L, s, 1, 1);
  return L;
}

void write_matrix(const Eigen::MatrixXd& M, Eigen::VectorXd& out, std::size_t offset) {
  auto k = static_cast<Eigen::Index>(offset);
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      out(k++) = M(i, j);
}

Eigen::MatrixXd read_matrix(const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t offset,
                            int rows, int cols) {
  Eigen::MatrixXd M(rows, cols);
  auto k = static_cast<Eigen::Index>(offset);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      M(i, j) = v(k++);
  return M;
}

Eigen::VectorXd flatten(const ParameterState& s) {
  const int n = s.n_sites();
  const int m = s.basis_dim();
  auto L = ParameterLayout::exdf(n, m);
  Eigen::VectorXd v(static_cast<Eigen::Index>(L.size()));
  write_matrix(s.c, v, L.groups[0].offset);
  write_matrix(s.d, v, L.groups[1].offset);
  write_matrix(s.alpha, v, L.groups[2].offset);
  write_matrix(s.beta, v, L.groups[3].offset);
  write_matrix(s.lambda, v, L.groups[4].offset);
  auto tail = static_cast<Eigen::Index>(L.groups[5].offset);
  v(tail) = s.xi_y;
  v(tail + 1) = s.xi_x;
  v(tail + 2) = s.sigma2_c;
  v(tail + 3) = s.sigma2_alpha;
  v(tail + 4) = s.sigma2_beta;
  return v;
}

ParameterState unflatten_state(const Eigen::Ref<const Eigen::VectorXd>& v, int n, int m) {
  auto L = ParameterLayout::exdf(n, m);
  if (static_cast<std::size_t>(v.size()) != L.size())
    throw InputError("flattened state has the wrong length");
  ParameterState s;
  s.c = read_matrix(v, L.groups[0].offset, n, m);
  s.d = read_matrix(v, L.groups[1].offset, n, m);
  s.alpha = read_matrix(v, L.groups[2].offset, n, m);
  s.beta = read_matrix(v, L.groups[3].offset, n, m);
  s.lambda = read_matrix(v, L.groups[4].offset, n, 4);
  auto tail = static_cast<Eigen::Index>(L.groups[5].offset);
  s.xi_y = v(tail);
  s.xi_x = v(tail + 1);
  s.sigma2_c = v(tail + 2);
  s.sigma2_alpha = v(tail + 3);
  s.sigma2_beta = v(tail + 4);
  return s;
}

} // namespace exdf
