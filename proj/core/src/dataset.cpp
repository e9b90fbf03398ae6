#include "flowshap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "flowshap/normalizer.hpp"
#include "flowshap/numfmt.hpp"
#include "flowshap/prng.hpp"

namespace flowshap {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

bool is_missing_token(const std::string& trimmed) {
  return trimmed.empty() || trimmed == "NaN" || trimmed == "Infinity";
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  size_t i = 0;
  const size_t n = text.size();

  while (i < n && text[i] == '#') {
    while (i < n && text[i] != '\n') ++i;
    if (i < n) ++i;
  }

  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool any = false;

  auto end_field = [&] {
    record.push_back(field_was_quoted ? field : trim(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
    any = false;
  };

  for (; i < n; ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty()) {
          in_quotes = true;
          field_was_quoted = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        any = true;
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
    }
  }
  if (any || !field.empty() || field_was_quoted || !record.empty()) end_record();
  return records;
}

namespace {

bool needs_quoting(const std::string& f) {
  if (!f.empty() && (f.front() == ' ' || f.back() == ' ')) return true;
  return f.find_first_of(",\"\n\r") != std::string::npos;
}

void append_csv_field(std::string& out, const std::string& f) {
  if (!needs_quoting(f)) {
    out += f;
    return;
  }
  out.push_back('"');
  for (char c : f) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
}

double column_median(std::vector<double> vals) {
  std::sort(vals.begin(), vals.end());
  const size_t m = vals.size();
  if (m % 2 == 1) return vals[m / 2];
  return (vals[m / 2 - 1] + vals[m / 2]) / 2.0;
}

}  // namespace

void FeatureSchema::validate() const {
  if (feature_names.empty()) throw SchemaError("schema has no features");
  std::unordered_set<std::string> seen;
  for (const auto& f : feature_names) {
    if (!seen.insert(f).second) throw SchemaError("duplicate feature name '" + f + "'");
    if (f == label_column) {
      throw SchemaError("label column '" + label_column + "' listed among features");
    }
  }
}

std::optional<std::size_t> FeatureSchema::feature_index(std::string_view name) const {
  for (size_t j = 0; j < feature_names.size(); ++j) {
    if (feature_names[j] == name) return j;
  }
  return std::nullopt;
}

const std::string* LogStep::find(std::string_view key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return &v;
  }
  return nullptr;
}

Dataset::Dataset(FeatureSchema schema, std::vector<double> values,
                 std::vector<std::uint8_t> labels, bool labeled,
                 std::vector<LogStep> log)
    : schema_(std::move(schema)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      labeled_(labeled),
      log_(std::move(log)) {
  const size_t nf = schema_.feature_names.size();
  if (nf == 0 || values_.size() % nf != 0) {
    throw ContractError("dataset value buffer does not match schema width");
  }
  n_rows_ = values_.size() / nf;
  if (labeled_ && labels_.size() != n_rows_) {
    throw ContractError("label count does not match row count");
  }
}

std::vector<double> Dataset::feature_column(std::size_t j) const {
  std::vector<double> col(n_rows_);
  for (size_t i = 0; i < n_rows_; ++i) col[i] = at(i, j);
  return col;
}

std::size_t Dataset::positive_count() const {
  return static_cast<size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

void Dataset::validate() const {
  for (double v : values_) {
    if (!std::isfinite(v)) throw DataError("dataset contains a non-finite value");
  }
  for (auto l : labels_) {
    if (l > 1) throw DataError("dataset label outside {0,1}");
  }
}

std::string_view to_string(MissingPolicy p) {
  return p == MissingPolicy::kDrop ? "drop" : "median";
}

MissingPolicy missing_policy_from_string(std::string_view s) {
  if (s == "drop") return MissingPolicy::kDrop;
  if (s == "median") return MissingPolicy::kMedian;
  throw ConfigError("unknown missing policy '" + std::string(s) + "'");
}

Dataset load_csv_from_string(const std::string& text, const FeatureSchema& schema,
                             MissingPolicy policy, bool require_labels,
                             const std::string& origin) {
  schema.validate();
  auto records = parse_csv_records(text);
  if (records.empty()) throw DataError("empty CSV file: " + origin);

  const auto& header = records[0];
  std::unordered_map<std::string, size_t> col_of;
  for (size_t c = 0; c < header.size(); ++c) col_of.emplace(trim(header[c]), c);

  const size_t nf = schema.feature_names.size();
  std::vector<size_t> feat_col(nf);
  for (size_t j = 0; j < nf; ++j) {
    auto it = col_of.find(schema.feature_names[j]);
    if (it == col_of.end()) {
      throw SchemaError("missing column '" + schema.feature_names[j] + "' in " + origin);
    }
    feat_col[j] = it->second;
  }
  bool labeled = false;
  size_t label_col = 0;
  if (auto it = col_of.find(schema.label_column); it != col_of.end()) {
    labeled = true;
    label_col = it->second;
  } else if (require_labels) {
    throw SchemaError("missing column '" + schema.label_column + "' in " + origin);
  }

  const size_t rows_in = records.size() - 1;
  std::vector<double> values;
  values.reserve(rows_in * nf);
  std::vector<std::string> raw_labels;
  size_t dropped_label = 0;

  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw ParseError("row " + fmt_int(static_cast<long long>(r)) + " has " +
                       fmt_int(static_cast<long long>(rec.size())) + " fields, expected " +
                       fmt_int(static_cast<long long>(header.size())) + " in " + origin);
    }
    if (labeled) {
      std::string lab = trim(rec[label_col]);
      if (lab.empty()) {
        ++dropped_label;
        continue;
      }
      raw_labels.push_back(std::move(lab));
    }
    for (size_t j = 0; j < nf; ++j) {
      const std::string cell = trim(rec[feat_col[j]]);
      if (is_missing_token(cell)) {
        values.push_back(kMissing);
        continue;
      }
      auto parsed = parse_double(cell);
      if (!parsed) {
        throw ParseError("non-numeric value '" + cell + "' at row " +
                         fmt_int(static_cast<long long>(r)) + ", column '" +
                         schema.feature_names[j] + "' in " + origin);
      }
      values.push_back(std::isfinite(*parsed) ? *parsed : kMissing);
    }
  }

  size_t n = values.size() / nf;
  size_t dropped_missing = 0;
  size_t imputed = 0;

  if (policy == MissingPolicy::kDrop) {
    std::vector<double> kept_values;
    kept_values.reserve(values.size());
    std::vector<std::string> kept_labels;
    for (size_t i = 0; i < n; ++i) {
      bool has_missing = false;
      for (size_t j = 0; j < nf; ++j) {
        if (std::isnan(values[i * nf + j])) {
          has_missing = true;
          break;
        }
      }
      if (has_missing) {
        ++dropped_missing;
        continue;
      }
      kept_values.insert(kept_values.end(), values.begin() + i * nf,
                         values.begin() + (i + 1) * nf);
      if (labeled) kept_labels.push_back(raw_labels[i]);
    }
    values = std::move(kept_values);
    raw_labels = std::move(kept_labels);
    n = values.size() / nf;
  } else {
    for (size_t j = 0; j < nf; ++j) {
      std::vector<double> present;
      for (size_t i = 0; i < n; ++i) {
        if (!std::isnan(values[i * nf + j])) present.push_back(values[i * nf + j]);
      }
      bool column_has_missing = present.size() < n;
      if (!column_has_missing) continue;
      if (present.empty()) {
        throw DataError("column '" + schema.feature_names[j] +
                        "' has no values to impute from");
      }
      const double med = column_median(std::move(present));
      for (size_t i = 0; i < n; ++i) {
        if (std::isnan(values[i * nf + j])) {
          values[i * nf + j] = med;
          ++imputed;
        }
      }
    }
  }

  std::vector<LogStep> log;
  LogStep load_step{"load_csv", {}};
  load_step.params.emplace_back("missing_policy", std::string(to_string(policy)));
  load_step.params.emplace_back("rows_in", fmt_int(static_cast<long long>(rows_in)));
  load_step.params.emplace_back("rows_dropped_missing_label",
                                fmt_int(static_cast<long long>(dropped_label)));
  if (policy == MissingPolicy::kDrop) {
    load_step.params.emplace_back("rows_dropped_missing",
                                  fmt_int(static_cast<long long>(dropped_missing)));
  } else {
    load_step.params.emplace_back("cells_imputed", fmt_int(static_cast<long long>(imputed)));
  }
  load_step.params.emplace_back("rows_out", fmt_int(static_cast<long long>(n)));
  log.push_back(std::move(load_step));

  std::vector<std::uint8_t> labels;
  if (labeled) {
    auto enc = encode_labels(raw_labels, schema.positive_label);
    labels = std::move(enc.labels);
    LogStep enc_step{"encode_labels", {}};
    enc_step.params.emplace_back("positive_label", schema.positive_label);
    enc_step.params.emplace_back(
        "positive_count",
        fmt_int(static_cast<long long>(std::count(labels.begin(), labels.end(), 1))));
    log.push_back(std::move(enc_step));
  }

  Dataset ds(schema, std::move(values), std::move(labels), labeled, std::move(log));
  ds.validate();
  return ds;
}

Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 MissingPolicy policy, bool require_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv_from_string(buf.str(), schema, policy, require_labels, path);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Dataset select_features(const Dataset& ds, SelectStrategy strategy, double threshold) {
  if (ds.n_rows() == 0) throw DataError("feature selection on empty dataset");
  const size_t d = ds.n_features();
  std::vector<bool> keep(d, true);

  if (strategy == SelectStrategy::kDropConstant) {
    for (size_t j = 0; j < d; ++j) {
      const double first = ds.at(0, j);
      bool constant = true;
      for (size_t i = 1; i < ds.n_rows(); ++i) {
        if (ds.at(i, j) != first) {
          constant = false;
          break;
        }
      }
      if (constant) keep[j] = false;
    }
  } else {
    std::vector<std::vector<double>> cols(d);
    for (size_t j = 0; j < d; ++j) cols[j] = ds.feature_column(j);
    for (size_t j = 1; j < d; ++j) {
      for (size_t i = 0; i < j; ++i) {
        if (!keep[i]) continue;
        if (std::abs(pearson(cols[i], cols[j])) >= threshold) {
          keep[j] = false;
          break;
        }
      }
    }
  }

  std::vector<std::string> removed;
  std::vector<std::string> kept_names;
  for (size_t j = 0; j < d; ++j) {
    if (keep[j]) kept_names.push_back(ds.schema().feature_names[j]);
    else removed.push_back(ds.schema().feature_names[j]);
  }
  if (kept_names.empty()) throw DataError("feature selection removed all features");

  std::vector<double> values;
  values.reserve(ds.n_rows() * kept_names.size());
  for (size_t i = 0; i < ds.n_rows(); ++i) {
    for (size_t j = 0; j < d; ++j) {
      if (keep[j]) values.push_back(ds.at(i, j));
    }
  }

  FeatureSchema schema = ds.schema();
  schema.feature_names = std::move(kept_names);

  auto log = ds.preprocessing_log();
  LogStep step{"select_features", {}};
  step.params.emplace_back("strategy", strategy == SelectStrategy::kDropConstant
                                           ? "drop_constant"
                                           : "correlation_prune");
  if (strategy == SelectStrategy::kCorrelationPrune) {
    step.params.emplace_back("threshold", fmt_double(threshold));
  }
  std::string removed_joined;
  for (size_t k = 0; k < removed.size(); ++k) {
    if (k) removed_joined.push_back(',');
    removed_joined += removed[k];
  }
  step.params.emplace_back("removed", removed_joined);
  log.push_back(std::move(step));

  return Dataset(std::move(schema), std::move(values),
                 std::vector<std::uint8_t>(ds.labels()), ds.labeled(), std::move(log));
}

EncodeResult encode_labels(const std::vector<std::string>& raw_labels,
                           const std::string& positive_label) {
  EncodeResult res;
  res.labels.reserve(raw_labels.size());
  for (const auto& s : raw_labels) {
    const bool pos = (s == positive_label);
    res.labels.push_back(pos ? 1 : 0);
    res.positive_seen |= pos;
  }
  return res;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<size_t>& sorted_idx) {
  const size_t nf = ds.n_features();
  std::vector<double> values;
  values.reserve(sorted_idx.size() * nf);
  std::vector<std::uint8_t> labels;
  if (ds.labeled()) labels.reserve(sorted_idx.size());
  for (size_t i : sorted_idx) {
    auto r = ds.row(i);
    values.insert(values.end(), r.begin(), r.end());
    if (ds.labeled()) labels.push_back(static_cast<std::uint8_t>(ds.label(i)));
  }
  return Dataset(ds.schema(), std::move(values), std::move(labels), ds.labeled(),
                 ds.preprocessing_log());
}

void shuffle_indices(std::vector<size_t>& idx, SplitMix64& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double train_fraction,
                                             std::uint64_t seed, bool stratified) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must be in (0,1)");
  }
  const size_t n = ds.n_rows();
  if (n < 2) throw DataError("need at least 2 records to split");

  SplitMix64 rng(mix_seed(seed, component_tag("split")));
  std::vector<size_t> train_idx;

  if (stratified) {
    if (!ds.labeled()) throw DataError("stratified split requires labels");
    for (int cls : {0, 1}) {
      std::vector<size_t> members;
      for (size_t i = 0; i < n; ++i) {
        if (ds.label(i) == cls) members.push_back(i);
      }
      if (members.empty()) {
        throw DataError("stratified split: class " + fmt_int(cls) + " has 0 records");
      }
      shuffle_indices(members, rng);
      size_t take = static_cast<size_t>(static_cast<double>(members.size()) * train_fraction);
      take = std::min(take, members.size() - 1);
      train_idx.insert(train_idx.end(), members.begin(), members.begin() + take);
    }
  } else {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    shuffle_indices(idx, rng);
    size_t take = static_cast<size_t>(static_cast<double>(n) * train_fraction);
    take = std::min(std::max<size_t>(take, 1), n - 1);
    train_idx.assign(idx.begin(), idx.begin() + take);
  }

  std::sort(train_idx.begin(), train_idx.end());
  std::vector<bool> in_train(n, false);
  for (size_t i : train_idx) in_train[i] = true;
  std::vector<size_t> test_idx;
  test_idx.reserve(n - train_idx.size());
  for (size_t i = 0; i < n; ++i) {
    if (!in_train[i]) test_idx.push_back(i);
  }

  return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

Dataset replay_preprocessing(const std::string& raw_csv_path, const FeatureSchema& schema,
                             const std::vector<LogStep>& log) {
  if (log.empty() || log[0].step != "load_csv") {
    throw ContractError("replay requires a log starting with load_csv");
  }
  const std::string* policy = log[0].find("missing_policy");
  if (policy == nullptr) throw ContractError("load_csv step missing policy parameter");
  Dataset ds = load_csv(raw_csv_path, schema, missing_policy_from_string(*policy));

  for (size_t s = 1; s < log.size(); ++s) {
    const LogStep& step = log[s];
    if (step.step == "encode_labels") {
      continue;  // performed inside load_csv
    }
    if (step.step == "select_features") {
      const std::string* strategy = step.find("strategy");
      if (strategy == nullptr) throw ContractError("select_features step missing strategy");
      if (*strategy == "drop_constant") {
        ds = select_features(ds, SelectStrategy::kDropConstant);
      } else {
        const std::string* thr = step.find("threshold");
        if (thr == nullptr) throw ContractError("correlation_prune step missing threshold");
        ds = select_features(ds, SelectStrategy::kCorrelationPrune, *parse_double(*thr));
      }
      continue;
    }
    if (step.step == "apply_normalizer") {
      ds = apply_normalizer(ds, normalizer_params_from_log(step));
      continue;
    }
    throw ContractError("cannot replay step '" + step.step + "'");
  }
  return ds;
}

std::string dataset_to_csv(const Dataset& ds, const std::string& meta_comment) {
  std::string out;
  if (!meta_comment.empty()) {
    out += "# ";
    out += meta_comment;
    out.push_back('\n');
  }
  const auto& names = ds.schema().feature_names;
  for (size_t j = 0; j < names.size(); ++j) {
    if (j) out.push_back(',');
    append_csv_field(out, names[j]);
  }
  if (ds.labeled()) {
    out.push_back(',');
    append_csv_field(out, ds.schema().label_column);
  }
  out.push_back('\n');
  for (size_t i = 0; i < ds.n_rows(); ++i) {
    for (size_t j = 0; j < names.size(); ++j) {
      if (j) out.push_back(',');
      out += fmt_double(ds.at(i, j));
    }
    if (ds.labeled()) {
      out.push_back(',');
      out += fmt_int(ds.label(i));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& ds, const std::string& path, const std::string& meta_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << dataset_to_csv(ds, meta_comment);
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace flowshap
