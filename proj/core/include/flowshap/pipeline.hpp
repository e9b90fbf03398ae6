#pragma once

#include <cstdint>
#include <vector>

#include "flowshap/dataset.hpp"
#include "flowshap/gbt.hpp"
#include "flowshap/iforest.hpp"
#include "flowshap/metrics.hpp"
#include "flowshap/normalizer.hpp"
#include "flowshap/rf.hpp"
#include "flowshap/shap.hpp"
#include "flowshap/tree.hpp"

namespace flowshap {

// One model kind per run plus the evaluation threshold. gbt flags anomaly at
// probability >= threshold, random forest at vote fraction > threshold, and
// isolation forest at score >= its score_threshold.
struct ModelConfig {
  EnsembleKind kind = EnsembleKind::kGbt;
  GbtConfig gbt;
  RfConfig rf;
  IforestConfig iforest;
  NormMethod norm_method = NormMethod::kMinMax;
  double threshold = 0.5;

  void validate() const;
  double classification_threshold() const;
  bool operator==(const ModelConfig&) const = default;
};

// A trained ensemble plus the normalizer fitted on its training split; all
// scoring below takes rows in the unnormalized (cleaned) feature space.
struct TrainedModel {
  Ensemble ensemble;
  NormalizerParams normalizer;
  FeatureSchema schema;
  std::vector<double> gbt_losses;
};

// Fits the normalizer on `train`, applies it, and trains the configured
// kind. `train` must be cleaned (no missing values) and unnormalized.
TrainedModel train_model(const Dataset& train, const ModelConfig& cfg, std::uint64_t seed);

// Link-space score: gbt probability, rf vote fraction, iforest anomaly score.
double model_score(const TrainedModel& model, std::span<const double> raw_x);

// The additive quantity attributions decompose (margin / vote / E[h]).
double model_explained_output(const TrainedModel& model, std::span<const double> raw_x);

int classify(const TrainedModel& model, std::span<const double> raw_x, double threshold);

ShapExplanation explain_instance(const TrainedModel& model, std::span<const double> raw_x);

ConfusionCounts evaluate_model(const TrainedModel& model, const Dataset& test,
                               double threshold);

struct FoldResult {
  int fold = 0;
  MetricsReport report;
};

struct SummaryStat {
  MetricValue mean;
  MetricValue stddev;
};

struct CvSummary {
  SummaryStat accuracy;
  SummaryStat precision;
  SummaryStat recall;
  SummaryStat f1;
};

struct CvResult {
  std::vector<FoldResult> folds;
  CvSummary summary;
};

// Deterministic fold deal from mix_seed(seed, "cv"): indices shuffle per
// class (stratified) or globally, then round-robin over folds. Each fold is
// tested once against a model trained on the remainder, with the normalizer
// refit on that remainder. Summary is the unweighted mean and population
// stddev over folds where the metric is defined.
CvResult kfold_cv(const Dataset& ds, const ModelConfig& cfg, int k, std::uint64_t seed,
                  bool stratified);

// Fold id per row, exposed for partition checks.
std::vector<int> assign_folds(const Dataset& ds, int k, std::uint64_t seed, bool stratified);

// Unweighted mean and population stddev per metric over defined folds.
CvSummary summarize_folds(const std::vector<FoldResult>& folds);

}  // namespace flowshap
