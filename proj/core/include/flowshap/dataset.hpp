#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowshap/errors.hpp"

namespace flowshap {

struct FeatureSchema {
  std::vector<std::string> feature_names;
  std::string label_column;
  std::string positive_label;

  // Unique feature names, label column not among them, at least one feature.
  void validate() const;
  std::optional<std::size_t> feature_index(std::string_view name) const;
  bool operator==(const FeatureSchema&) const = default;
};

// One applied preprocessing step with its parameters, stringified with full
// precision. The ordered list of steps is replayable: running the same steps
// against the raw input reproduces the dataset bit-exactly.
struct LogStep {
  std::string step;
  std::vector<std::pair<std::string, std::string>> params;

  const std::string* find(std::string_view key) const;
  bool operator==(const LogStep&) const = default;
};

// Immutable matrix of flow feature vectors plus optional binary labels.
// Every transforming operation returns a new Dataset with an extended
// preprocessing log; instances are safe to share across threads.
class Dataset {
 public:
  Dataset() = default;
  Dataset(FeatureSchema schema, std::vector<double> values,
          std::vector<std::uint8_t> labels, bool labeled,
          std::vector<LogStep> log);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_features() const { return schema_.feature_names.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * n_features(), n_features()};
  }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_features() + j]; }
  bool labeled() const { return labeled_; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  const FeatureSchema& schema() const { return schema_; }
  const std::vector<LogStep>& preprocessing_log() const { return log_; }
  const std::vector<double>& values() const { return values_; }

  std::vector<double> feature_column(std::size_t j) const;
  // Count of records with label 1 (requires labels).
  std::size_t positive_count() const;
  // Raises DataError if any cell is non-finite or any label is not in {0,1}.
  void validate() const;

  bool operator==(const Dataset&) const = default;

 private:
  FeatureSchema schema_;
  std::vector<double> values_;  // row-major, n_rows x n_features
  std::vector<std::uint8_t> labels_;
  bool labeled_ = false;
  std::size_t n_rows_ = 0;
  std::vector<LogStep> log_;
};

enum class MissingPolicy { kDrop, kMedian };

std::string_view to_string(MissingPolicy p);
MissingPolicy missing_policy_from_string(std::string_view s);

// Loads a CSV with a header row. Feature columns named by the schema are
// required; extra columns are ignored. An empty cell, a literal "NaN" or
// "Infinity", or any value that parses non-finite marks the cell missing.
// Rows with a missing label are always dropped; remaining missing feature
// values are resolved per policy. When require_labels is false a file
// without the label column yields an unlabeled dataset.
// Low-level CSV reader shared by every CSV surface: quoted fields, doubled
// quotes, newlines inside quotes, '#' comment lines before the header
// skipped, blank records dropped. Unquoted fields are whitespace-trimmed.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text);

Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 MissingPolicy policy, bool require_labels = true);
Dataset load_csv_from_string(const std::string& text, const FeatureSchema& schema,
                             MissingPolicy policy, bool require_labels = true,
                             const std::string& origin = "<memory>");

enum class SelectStrategy { kDropConstant, kCorrelationPrune };

// drop_constant removes features identical across all records.
// correlation_prune removes the later-indexed feature of each pair whose
// |Pearson r| meets the threshold; pairs are scanned in index order against
// features still kept, so the earliest column of a correlated group survives.
Dataset select_features(const Dataset& ds, SelectStrategy strategy,
                        double threshold = 0.99);

// Pearson correlation of two equal-length columns; 0 when either side is
// constant.
double pearson(std::span<const double> a, std::span<const double> b);

struct EncodeResult {
  std::vector<std::uint8_t> labels;
  bool positive_seen = false;
};

// Case-sensitive exact match against positive_label -> 1, everything else 0.
// An absent positive label is a warning condition, not an error; the caller
// decides how to surface positive_seen == false.
EncodeResult encode_labels(const std::vector<std::string>& raw_labels,
                           const std::string& positive_label);

// Deterministic shuffle split. Stratified mode splits each class with the
// same fraction (floor per class) so proportions hold within one record.
// Both parts keep records in their original relative order.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                             double train_fraction,
                                             std::uint64_t seed,
                                             bool stratified);

// Reapplies a preprocessing log (load_csv / select_features / encode_labels /
// apply_normalizer steps) to the raw CSV. Used to audit that a dataset's
// provenance reproduces it exactly.
Dataset replay_preprocessing(const std::string& raw_csv_path,
                             const FeatureSchema& schema,
                             const std::vector<LogStep>& log);

// CSV export: optional "# ..." metadata comment line, then header, then rows
// with reals as shortest round-trip decimals. Loaders skip leading comment
// lines, so exported files feed straight back into load_csv.
std::string dataset_to_csv(const Dataset& ds, const std::string& meta_comment = "");
void write_csv(const Dataset& ds, const std::string& path,
               const std::string& meta_comment = "");

}  // namespace flowshap
