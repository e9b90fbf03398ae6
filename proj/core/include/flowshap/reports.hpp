#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flowshap/dataset.hpp"
#include "flowshap/metrics.hpp"
#include "flowshap/pipeline.hpp"
#include "flowshap/shap.hpp"
#include "flowshap/tree.hpp"

namespace flowshap {

// Provenance stamped into every generated file.
struct ReportMeta {
  std::string config_hash_hex;
  std::uint64_t seed = 0;
};

// Name of the quantity attributions decompose for a model kind.
std::string_view explained_quantity(EnsembleKind kind);

// {protocol, model, threshold, config_hash, seed, folds, summary}; undefined
// metrics are null with the reason listed under "undefined_reasons".
std::string metrics_report_json(std::string_view protocol, EnsembleKind kind,
                                double threshold, const std::vector<FoldResult>& folds,
                                const CvSummary& summary, const ReportMeta& meta);

// One row per instance: feature attribution columns, then base_value and
// model_output. A leading '#' comment carries the provenance.
std::string shap_csv(const std::vector<ShapExplanation>& explanations,
                     const FeatureSchema& schema, EnsembleKind kind,
                     const ReportMeta& meta);

struct ShapCsvData {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> phi;   // per instance
  std::vector<double> base_value;
  std::vector<double> model_output;
  std::string meta_comment;               // first '#' line, if any
};

ShapCsvData parse_shap_csv(const std::string& text, const std::string& origin);
ShapCsvData load_shap_csv(const std::string& path);

// Line-delimited JSON: one header record, then one bar record per feature
// (ranked by mean |phi|) and one point record per (instance, feature) with
// the feature value scaled to [0,1] over the batch (constant features 0.5).
std::string plot_summary_jsonl(const std::vector<ShapExplanation>& explanations,
                               const Dataset& instances, EnsembleKind kind,
                               std::string_view dataset_name, const ReportMeta& meta);

// Header plus one record for a single instance: base, phi per feature, output.
std::string plot_force_jsonl(const ShapExplanation& explanation, std::size_t instance_index,
                             const FeatureSchema& schema, EnsembleKind kind,
                             std::string_view dataset_name, const ReportMeta& meta);

// Header plus {feature_value, shap_value} per instance for one feature, in
// the input (unnormalized) feature space.
std::string plot_dependence_jsonl(const std::vector<ShapExplanation>& explanations,
                                  const Dataset& instances, std::string_view feature,
                                  EnsembleKind kind, std::string_view dataset_name,
                                  const ReportMeta& meta);

std::string ranking_json(const FeatureRanking& ranking,
                         const std::vector<std::string>& feature_names,
                         const ReportMeta& meta);

// Human-readable report: per flagged instance, the top_k features by |phi|
// with values and signed attributions, most influential first.
std::string case_study_text(const std::vector<ShapExplanation>& explanations,
                            const std::vector<std::size_t>& flagged,
                            const std::vector<double>& scores, const Dataset& instances,
                            EnsembleKind kind, int top_k, const ReportMeta& meta);

}  // namespace flowshap
