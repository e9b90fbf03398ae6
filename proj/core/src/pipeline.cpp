#include "flowshap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowshap/errors.hpp"
#include "flowshap/numfmt.hpp"
#include "flowshap/prng.hpp"

namespace flowshap {

void ModelConfig::validate() const {
  switch (kind) {
    case EnsembleKind::kGbt: gbt.validate(); break;
    case EnsembleKind::kRandomForest: rf.validate(); break;
    case EnsembleKind::kIsolationForest: iforest.validate(); break;
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold must be in (0,1)");
  }
}

double ModelConfig::classification_threshold() const {
  return kind == EnsembleKind::kIsolationForest ? iforest.score_threshold : threshold;
}

TrainedModel train_model(const Dataset& train, const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrainedModel model;
  model.schema = train.schema();
  model.normalizer = fit_normalizer(train, cfg.norm_method);
  const Dataset normalized = apply_normalizer(train, model.normalizer);

  switch (cfg.kind) {
    case EnsembleKind::kGbt: {
      auto res = train_gbt(normalized, cfg.gbt);
      model.ensemble = std::move(res.ensemble);
      model.gbt_losses = std::move(res.losses);
      break;
    }
    case EnsembleKind::kRandomForest:
      model.ensemble = train_rf(normalized, cfg.rf, seed);
      break;
    case EnsembleKind::kIsolationForest:
      model.ensemble = train_iforest(normalized, cfg.iforest, seed).ensemble;
      break;
  }
  return model;
}

double model_score(const TrainedModel& model, std::span<const double> raw_x) {
  const std::vector<double> x = normalize_row(raw_x, model.normalizer);
  switch (model.ensemble.kind) {
    case EnsembleKind::kGbt: return predict_gbt_proba(model.ensemble, x);
    case EnsembleKind::kRandomForest: return predict_rf(model.ensemble, x).second;
    case EnsembleKind::kIsolationForest: return anomaly_score(model.ensemble, x);
  }
  throw ContractError("invalid ensemble kind");
}

double model_explained_output(const TrainedModel& model, std::span<const double> raw_x) {
  const std::vector<double> x = normalize_row(raw_x, model.normalizer);
  if (model.ensemble.kind == EnsembleKind::kIsolationForest) {
    return expected_path_length(model.ensemble, x);
  }
  return predict_ensemble_margin(model.ensemble, x);
}

int classify(const TrainedModel& model, std::span<const double> raw_x, double threshold) {
  const double score = model_score(model, raw_x);
  if (model.ensemble.kind == EnsembleKind::kRandomForest) {
    return score > threshold ? 1 : 0;
  }
  return score >= threshold ? 1 : 0;
}

ShapExplanation explain_instance(const TrainedModel& model, std::span<const double> raw_x) {
  const std::vector<double> x = normalize_row(raw_x, model.normalizer);
  return tree_shap(model.ensemble, x);
}

ConfusionCounts evaluate_model(const TrainedModel& model, const Dataset& test,
                               double threshold) {
  if (!test.labeled()) throw DataError("evaluation requires labeled data");
  if (test.n_rows() == 0) throw DataError("evaluation requires at least one record");
  ConfusionCounts counts;
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    const int pred = classify(model, test.row(i), threshold);
    if (pred == 1) {
      if (test.label(i) == 1) ++counts.tp;
      else ++counts.fp;
    } else {
      if (test.label(i) == 1) ++counts.fn;
      else ++counts.tn;
    }
  }
  return counts;
}

std::vector<int> assign_folds(const Dataset& ds, int k, std::uint64_t seed, bool stratified) {
  if (k < 2) throw ConfigError("k must be at least 2");
  const std::size_t n = ds.n_rows();
  if (n < static_cast<std::size_t>(k)) throw DataError("fewer records than folds");

  SplitMix64 rng(mix_seed(seed, component_tag("cv")));
  std::vector<int> fold_of(n, -1);

  auto deal = [&](std::vector<std::size_t>& members) {
    for (std::size_t i = members.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
      std::swap(members[i - 1], members[j]);
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      fold_of[members[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
  };

  if (stratified) {
    if (!ds.labeled()) throw DataError("stratified folds require labels");
    for (int cls : {0, 1}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (ds.label(i) == cls) members.push_back(i);
      }
      if (members.size() < static_cast<std::size_t>(k)) {
        throw DataError("class " + fmt_int(cls) + " has " +
                        fmt_int(static_cast<long long>(members.size())) +
                        " records, fewer than " + fmt_int(k) + " folds");
      }
      deal(members);
    }
  } else {
    std::vector<std::size_t> members(n);
    std::iota(members.begin(), members.end(), 0u);
    deal(members);
  }
  return fold_of;
}

namespace {

Dataset rows_where(const Dataset& ds, const std::vector<int>& fold_of, int fold,
                   bool equal) {
  std::vector<double> values;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    if ((fold_of[i] == fold) != equal) continue;
    auto r = ds.row(i);
    values.insert(values.end(), r.begin(), r.end());
    if (ds.labeled()) labels.push_back(static_cast<std::uint8_t>(ds.label(i)));
  }
  return Dataset(ds.schema(), std::move(values), std::move(labels), ds.labeled(),
                 ds.preprocessing_log());
}

}  // namespace

namespace {

SummaryStat summarize(const std::vector<FoldResult>& folds,
                      MetricValue MetricsReport::* member) {
  std::vector<double> defined;
  for (const auto& f : folds) {
    const MetricValue& mv = f.report.*member;
    if (mv.defined()) defined.push_back(*mv.value);
  }
  SummaryStat stat;
  if (defined.empty()) {
    stat.mean.reason = "undefined in every fold";
    stat.stddev.reason = "undefined in every fold";
    return stat;
  }
  double mean = 0.0;
  for (double v : defined) mean += v;
  mean /= static_cast<double>(defined.size());
  double ss = 0.0;
  for (double v : defined) ss += (v - mean) * (v - mean);
  stat.mean.value = mean;
  stat.stddev.value = std::sqrt(ss / static_cast<double>(defined.size()));
  return stat;
}

}  // namespace

CvSummary summarize_folds(const std::vector<FoldResult>& folds) {
  CvSummary summary;
  summary.accuracy = summarize(folds, &MetricsReport::accuracy);
  summary.precision = summarize(folds, &MetricsReport::precision);
  summary.recall = summarize(folds, &MetricsReport::recall);
  summary.f1 = summarize(folds, &MetricsReport::f1);
  return summary;
}

CvResult kfold_cv(const Dataset& ds, const ModelConfig& cfg, int k, std::uint64_t seed,
                  bool stratified) {
  cfg.validate();
  if (!ds.labeled()) throw DataError("cross-validation requires labels");
  const std::vector<int> fold_of = assign_folds(ds, k, seed, stratified);

  CvResult result;
  result.folds.reserve(static_cast<std::size_t>(k));
  for (int fold = 0; fold < k; ++fold) {
    const Dataset train = rows_where(ds, fold_of, fold, false);
    const Dataset test = rows_where(ds, fold_of, fold, true);
    if (test.n_rows() == 0) throw DataError("fold " + fmt_int(fold) + " has no records");
    const TrainedModel model = train_model(train, cfg, seed);
    const ConfusionCounts counts =
        evaluate_model(model, test, cfg.classification_threshold());
    result.folds.push_back(FoldResult{fold, compute_metrics(counts)});
  }
  result.summary = summarize_folds(result.folds);
  return result;
}

}  // namespace flowshap
