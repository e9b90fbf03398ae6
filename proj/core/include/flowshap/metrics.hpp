#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace flowshap {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// A metric that may be undefined (zero denominator); undefined carries a
// reason and is distinct from 0.0.
struct MetricValue {
  std::optional<double> value;
  std::string reason;

  bool defined() const { return value.has_value(); }
};

struct MetricsReport {
  ConfusionCounts counts;
  MetricValue accuracy;
  MetricValue precision;
  MetricValue recall;
  MetricValue f1;
};

ConfusionCounts count_confusion(std::span<const int> y_true, std::span<const int> y_pred);

// accuracy (TP+TN)/total, precision TP/(TP+FP), recall TP/(TP+FN),
// f1 = 2PR/(P+R); each undefined when its denominator is zero.
MetricsReport compute_metrics(const ConfusionCounts& counts);
MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred);

double f1_score(double precision, double recall);

}  // namespace flowshap
