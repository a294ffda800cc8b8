#include "exdf/numeric.hpp"

#include <algorithm>
#include <limits>

#include "exdf/error.hpp"

namespace exdf {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty())
    throw InputError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0))
    throw InputError("quantile level must lie in [0, 1]");
  double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double q) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values)
    if (!is_missing(x))
      v.push_back(x);
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, q);
}

double mean(std::span<const double> values) {
  if (values.empty())
    return std::numeric_limits<double>::quiet_NaN();
  CompensatedSum s;
  for (double x : values)
    s += x;
  return s.value() / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2)
    return std::numeric_limits<double>::quiet_NaN();
  double m = mean(values);
  CompensatedSum s;
  for (double x : values)
    s += (x - m) * (x - m);
  return s.value() / static_cast<double>(values.size() - 1);
}

} // namespace exdf
