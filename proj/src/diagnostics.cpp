#include "exdf/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "exdf/error.hpp"
#include "exdf/numeric.hpp"

namespace exdf {

RhatResult split_rhat(std::span<const std::vector<double>> chains) {
  if (chains.size() < 2)
    throw InputError("split R-hat needs at least 2 chains");
  std::size_t n = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != n)
      throw InputError("chains must have equal length");
  if (n < 10)
    throw InputError("split R-hat needs chains of length >= 10");
  const std::size_t half = n / 2;
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    std::span<const double> first(c.data(), half);
    std::span<const double> second(c.data() + (n - half), half);
    for (auto part : {first, second}) {
      means.push_back(mean(part));
      vars.push_back(sample_variance(part));
    }
  }
  const double L = static_cast<double>(half);
  const double M = static_cast<double>(means.size());
  const double grand = mean(means);
  CompensatedSum between;
  for (double mu : means)
    between += (mu - grand) * (mu - grand);
  const double B = L * between.value() / (M - 1.0);
  const double W = mean(vars);
  if (!(W > 0.0))
    return {std::numeric_limits<double>::quiet_NaN(), true};
  const double var_plus = (L - 1.0) / L * W + B / L;
  return {std::sqrt(var_plus / W), false};
}

RhatResult gelman_rubin(const PosteriorArchive& archive, std::size_t param) {
  std::vector<std::vector<double>> chains;
  for (std::size_t c = 0; c < archive.n_chains(); ++c)
    chains.push_back(archive.trace(c, param));
  return split_rhat(chains);
}

std::vector<GroupRhat> group_rhat(const PosteriorArchive& archive) {
  std::vector<GroupRhat> out;
  for (const auto& g : archive.layout.groups) {
    GroupRhat r{g.name, 0.0, {}, 0};
    for (std::size_t k = g.offset; k < g.offset + g.size; ++k) {
      auto res = gelman_rubin(archive, k);
      if (res.degenerate) {
        ++r.degenerate;
        continue;
      }
      if (res.value > r.max_rhat || r.worst.empty()) {
        r.max_rhat = res.value;
        r.worst = archive.layout.element_name(k);
      }
    }
    out.push_back(r);
  }
  return out;
}

} // namespace exdf
