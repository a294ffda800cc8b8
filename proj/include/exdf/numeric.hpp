#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace exdf {

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Type-7 (linear interpolation) empirical quantile of already sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

/// Type-7 empirical quantile; copies and sorts, ignoring NaN entries.
double quantile(std::span<const double> values, double q);

double mean(std::span<const double> values);

/// Unbiased sample variance (n - 1 denominator).
double sample_variance(std::span<const double> values);

inline bool is_missing(double v) { return std::isnan(v); }

} // namespace exdf
