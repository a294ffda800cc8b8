#pragma once

#include <optional>
#include <span>
#include <vector>

namespace exdf {

/// Sample CRPS, mean|X - y| - 1/2 mean|X - X'| with the second mean taken
/// over all n^2 ordered pairs; evaluated exactly after sorting.
double crps(std::span<const double> draws, double y);

double rmse(std::span<const double> predicted, std::span<const double> observed);
double mae(std::span<const double> predicted, std::span<const double> observed);

struct ConfusionMatrix {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Metrics whose denominator is zero are left empty.
struct ClassificationMetrics {
  ConfusionMatrix counts;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> specificity;
  std::optional<double> f1;
};

ConfusionMatrix confusion_matrix(std::span<const double> exceed_prob,
                                 std::span<const int> observed, double cutoff = 0.5);
ClassificationMetrics classification_metrics(const ConfusionMatrix& counts);
ClassificationMetrics classification_metrics(std::span<const double> exceed_prob,
                                             std::span<const int> observed, double cutoff = 0.5);

} // namespace exdf
