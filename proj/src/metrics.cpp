#include "exdf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "exdf/error.hpp"
#include "exdf/numeric.hpp"

namespace exdf {

double crps(std::span<const double> draws, double y) {
  if (draws.size() < 2)
    throw InputError("CRPS needs at least 2 draws");
  std::vector<double> x(draws.begin(), draws.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  CompensatedSum abs_err, spread;
  for (std::size_t i = 0; i < x.size(); ++i) {
    abs_err += std::abs(x[i] - y);
    // Sum over ordered pairs of |x_i - x_j| = 2 sum_i (2i - n + 1) x_(i).
    spread += (2.0 * static_cast<double>(i) - n + 1.0) * x[i];
  }
  return std::max(0.0, abs_err.value() / n - spread.value() / (n * n));
}

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b)
    throw InputError("prediction and observation lengths differ");
  if (a == 0)
    throw InputError("no observations to score");
}

} // namespace

double rmse(std::span<const double> predicted, std::span<const double> observed) {
  check_lengths(predicted.size(), observed.size());
  CompensatedSum s;
  for (std::size_t k = 0; k < predicted.size(); ++k)
    s += (predicted[k] - observed[k]) * (predicted[k] - observed[k]);
  return std::sqrt(s.value() / static_cast<double>(predicted.size()));
}

double mae(std::span<const double> predicted, std::span<const double> observed) {
  check_lengths(predicted.size(), observed.size());
  CompensatedSum s;
  for (std::size_t k = 0; k < predicted.size(); ++k)
    s += std::abs(predicted[k] - observed[k]);
  return s.value() / static_cast<double>(predicted.size());
}

ConfusionMatrix confusion_matrix(std::span<const double> exceed_prob,
                                 std::span<const int> observed, double cutoff) {
  if (exceed_prob.size() != observed.size())
    throw InputError("probability and indicator lengths differ");
  ConfusionMatrix c;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    bool predicted = exceed_prob[k] >= cutoff;
    bool actual = observed[k] != 0;
    if (predicted && actual)
      ++c.tp;
    else if (predicted)
      ++c.fp;
    else if (actual)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& c) {
  auto ratio = [](long num, long den) -> std::optional<double> {
    if (den == 0)
      return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  ClassificationMetrics m;
  m.counts = c;
  m.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  // F1 = 2TP / (2TP + FP + FN), the harmonic mean of precision and recall.
  if (m.precision && m.recall)
    m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

ClassificationMetrics classification_metrics(std::span<const double> exceed_prob,
                                             std::span<const int> observed, double cutoff) {
  return classification_metrics(confusion_matrix(exceed_prob, observed, cutoff));
}

} // namespace exdf
