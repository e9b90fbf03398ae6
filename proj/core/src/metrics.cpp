#include "flowshap/metrics.hpp"

#include "flowshap/errors.hpp"

namespace flowshap {

ConfusionCounts count_confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ContractError("label and prediction lengths differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i] == 1) {
      if (y_true[i] == 1) ++c.tp;
      else ++c.fp;
    } else {
      if (y_true[i] == 1) ++c.fn;
      else ++c.tn;
    }
  }
  return c;
}

double f1_score(double precision, double recall) {
  return 2.0 * precision * recall / (precision + recall);
}

MetricsReport compute_metrics(const ConfusionCounts& counts) {
  MetricsReport r;
  r.counts = counts;
  const auto tp = static_cast<double>(counts.tp);
  const auto tn = static_cast<double>(counts.tn);

  if (counts.total() == 0) {
    r.accuracy.reason = "no records evaluated";
  } else {
    r.accuracy.value = (tp + tn) / static_cast<double>(counts.total());
  }

  if (counts.tp + counts.fp == 0) {
    r.precision.reason = "no positive predictions";
  } else {
    r.precision.value = tp / static_cast<double>(counts.tp + counts.fp);
  }

  if (counts.tp + counts.fn == 0) {
    r.recall.reason = "no positive labels";
  } else {
    r.recall.value = tp / static_cast<double>(counts.tp + counts.fn);
  }

  if (!r.precision.defined() && !r.recall.defined()) {
    r.f1.reason = "precision and recall undefined";
  } else if (!r.precision.defined()) {
    r.f1.reason = "precision undefined";
  } else if (!r.recall.defined()) {
    r.f1.reason = "recall undefined";
  } else if (*r.precision.value + *r.recall.value == 0.0) {
    r.f1.reason = "precision and recall are both zero";
  } else {
    r.f1.value = f1_score(*r.precision.value, *r.recall.value);
  }
  return r;
}

MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw ContractError("cannot compute metrics on zero records");
  return compute_metrics(count_confusion(y_true, y_pred));
}

}  // namespace flowshap
