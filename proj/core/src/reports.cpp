#include "flowshap/reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flowshap/errors.hpp"
#include "flowshap/jsonw.hpp"
#include "flowshap/numfmt.hpp"

namespace flowshap {

std::string_view explained_quantity(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::kGbt: return "margin";
    case EnsembleKind::kRandomForest: return "vote_fraction";
    case EnsembleKind::kIsolationForest: return "expected_path_length";
  }
  throw ContractError("invalid ensemble kind");
}

namespace {

constexpr std::string_view kIforestSignNote =
    "negative phi pushes toward anomaly (shorter expected paths)";

void write_metric(JsonWriter& w, const char* name, const MetricValue& mv) {
  w.key(name);
  if (mv.defined()) w.value(*mv.value);
  else w.null();
}

void write_reasons(JsonWriter& w, std::initializer_list<std::pair<const char*, const MetricValue*>> metrics) {
  bool any = false;
  for (const auto& [name, mv] : metrics) {
    if (!mv->defined()) {
      any = true;
      break;
    }
  }
  if (!any) return;
  w.key("undefined_reasons").begin_object();
  for (const auto& [name, mv] : metrics) {
    if (!mv->defined()) w.key(name).value(std::string_view(mv->reason));
  }
  w.end_object();
}

void write_summary_stat(JsonWriter& w, const char* name, const SummaryStat& stat) {
  w.key(name).begin_object();
  write_metric(w, "mean", stat.mean);
  write_metric(w, "stddev", stat.stddev);
  if (!stat.mean.defined()) w.key("reason").value(std::string_view(stat.mean.reason));
  w.end_object();
}

void write_meta(JsonWriter& w, const ReportMeta& meta) {
  w.key("config_hash").value(std::string_view(meta.config_hash_hex));
  w.key("seed").value(meta.seed);
}

std::string meta_comment_line(const ReportMeta& meta, EnsembleKind kind) {
  std::string out = "config_hash=";
  out += meta.config_hash_hex;
  out += " seed=";
  out += fmt_int(static_cast<long long>(meta.seed));
  out += " model=";
  out += to_string(kind);
  out += " explained=";
  out += explained_quantity(kind);
  return out;
}

void plot_header(JsonWriter& w, std::string_view plot, EnsembleKind kind,
                 std::string_view dataset_name, const ReportMeta& meta) {
  w.begin_object();
  w.key("type").value("header");
  w.key("plot").value(plot);
  w.key("model").value(to_string(kind));
  w.key("explained").value(explained_quantity(kind));
  if (kind == EnsembleKind::kIsolationForest) w.key("note").value(kIforestSignNote);
  w.key("dataset").value(dataset_name);
  write_meta(w, meta);
}

// Per-feature min-max scaling over the plotted batch; constant maps to 0.5.
std::vector<std::pair<double, double>> batch_ranges(const Dataset& instances) {
  std::vector<std::pair<double, double>> ranges(instances.n_features());
  for (std::size_t j = 0; j < instances.n_features(); ++j) {
    double lo = instances.at(0, j), hi = lo;
    for (std::size_t i = 1; i < instances.n_rows(); ++i) {
      const double v = instances.at(i, j);
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    ranges[j] = {lo, hi};
  }
  return ranges;
}

}  // namespace

std::string metrics_report_json(std::string_view protocol, EnsembleKind kind,
                                double threshold, const std::vector<FoldResult>& folds,
                                const CvSummary& summary, const ReportMeta& meta) {
  JsonWriter w;
  w.begin_object();
  w.key("protocol").value(protocol);
  w.key("model").value(to_string(kind));
  w.key("threshold").value(threshold);
  write_meta(w, meta);
  w.key("folds").begin_array();
  for (const auto& fold : folds) {
    const MetricsReport& r = fold.report;
    w.begin_object();
    w.key("fold").value(fold.fold);
    w.key("tp").value(static_cast<std::uint64_t>(r.counts.tp));
    w.key("fp").value(static_cast<std::uint64_t>(r.counts.fp));
    w.key("fn").value(static_cast<std::uint64_t>(r.counts.fn));
    w.key("tn").value(static_cast<std::uint64_t>(r.counts.tn));
    write_metric(w, "accuracy", r.accuracy);
    write_metric(w, "precision", r.precision);
    write_metric(w, "recall", r.recall);
    write_metric(w, "f1", r.f1);
    write_reasons(w, {{"accuracy", &r.accuracy},
                      {"precision", &r.precision},
                      {"recall", &r.recall},
                      {"f1", &r.f1}});
    w.end_object();
  }
  w.end_array();
  w.key("summary").begin_object();
  write_summary_stat(w, "accuracy", summary.accuracy);
  write_summary_stat(w, "precision", summary.precision);
  write_summary_stat(w, "recall", summary.recall);
  write_summary_stat(w, "f1", summary.f1);
  w.end_object();
  w.end_object();
  std::string out = w.take();
  out.push_back('\n');
  return out;
}

std::string shap_csv(const std::vector<ShapExplanation>& explanations,
                     const FeatureSchema& schema, EnsembleKind kind,
                     const ReportMeta& meta) {
  std::string out = "# ";
  out += meta_comment_line(meta, kind);
  out.push_back('\n');
  for (std::size_t j = 0; j < schema.feature_names.size(); ++j) {
    if (j) out.push_back(',');
    out += schema.feature_names[j];
  }
  out += ",base_value,model_output\n";
  for (const auto& e : explanations) {
    if (e.phi.size() != schema.feature_names.size()) {
      throw ContractError("explanation width does not match schema");
    }
    for (std::size_t j = 0; j < e.phi.size(); ++j) {
      if (j) out.push_back(',');
      out += fmt_double(e.phi[j]);
    }
    out.push_back(',');
    out += fmt_double(e.base_value);
    out.push_back(',');
    out += fmt_double(e.model_output);
    out.push_back('\n');
  }
  return out;
}

ShapCsvData parse_shap_csv(const std::string& text, const std::string& origin) {
  ShapCsvData data;
  if (text.size() > 1 && text[0] == '#') {
    const std::size_t eol = text.find('\n');
    std::size_t start = 1;
    while (start < text.size() && text[start] == ' ') ++start;
    data.meta_comment = text.substr(start, (eol == std::string::npos ? text.size() : eol) - start);
  }

  const auto records = parse_csv_records(text);
  if (records.empty()) throw DataError("empty attribution CSV: " + origin);
  const auto& header = records[0];
  if (header.size() < 3 || header[header.size() - 2] != "base_value" ||
      header[header.size() - 1] != "model_output") {
    throw SchemaError("attribution CSV must end with base_value,model_output columns: " +
                      origin);
  }
  const std::size_t d = header.size() - 2;
  data.feature_names.assign(header.begin(), header.begin() + static_cast<long>(d));
  if (records.size() < 2) throw DataError("attribution CSV has no rows: " + origin);

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw ParseError("row " + fmt_int(static_cast<long long>(r)) +
                       " has wrong field count in " + origin);
    }
    std::vector<double> phi(d);
    for (std::size_t j = 0; j < d; ++j) {
      auto v = parse_double(rec[j]);
      if (!v) {
        throw ParseError("non-numeric value '" + rec[j] + "' at row " +
                         fmt_int(static_cast<long long>(r)) + " in " + origin);
      }
      phi[j] = *v;
    }
    auto base = parse_double(rec[d]);
    auto output = parse_double(rec[d + 1]);
    if (!base || !output) {
      throw ParseError("non-numeric base/output at row " + fmt_int(static_cast<long long>(r)) +
                       " in " + origin);
    }
    data.phi.push_back(std::move(phi));
    data.base_value.push_back(*base);
    data.model_output.push_back(*output);
  }
  return data;
}

ShapCsvData load_shap_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open attribution CSV: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_shap_csv(buf.str(), path);
}

std::string plot_summary_jsonl(const std::vector<ShapExplanation>& explanations,
                               const Dataset& instances, EnsembleKind kind,
                               std::string_view dataset_name, const ReportMeta& meta) {
  if (explanations.empty()) throw DataError("no explanations to plot");
  if (instances.n_rows() != explanations.size()) {
    throw ContractError("explanation count does not match instance count");
  }
  const std::size_t d = instances.n_features();
  const auto& names = instances.schema().feature_names;
  std::string out;

  {
    JsonWriter w;
    plot_header(w, "summary", kind, dataset_name, meta);
    w.key("n_instances").value(static_cast<std::uint64_t>(explanations.size()));
    w.key("n_features").value(static_cast<std::uint64_t>(d));
    w.end_object();
    out += w.take();
    out.push_back('\n');
  }

  const FeatureRanking ranking = rank_by_mean_abs(explanations, d);
  for (std::size_t k = 0; k < d; ++k) {
    JsonWriter w;
    w.begin_object();
    w.key("type").value("bar");
    w.key("rank").value(static_cast<std::uint64_t>(k + 1));
    w.key("feature").value(std::string_view(names[ranking.order[k]]));
    w.key("mean_abs_shap").value(ranking.mean_abs_phi[k]);
    w.end_object();
    out += w.take();
    out.push_back('\n');
  }

  const auto ranges = batch_ranges(instances);
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto [lo, hi] = ranges[j];
      const double v = instances.at(i, j);
      const double scaled = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      JsonWriter w;
      w.begin_object();
      w.key("type").value("point");
      w.key("instance").value(static_cast<std::uint64_t>(i));
      w.key("feature").value(std::string_view(names[j]));
      w.key("shap_value").value(explanations[i].phi[j]);
      w.key("feature_value_scaled").value(scaled);
      w.end_object();
      out += w.take();
      out.push_back('\n');
    }
  }
  return out;
}

std::string plot_force_jsonl(const ShapExplanation& explanation, std::size_t instance_index,
                             const FeatureSchema& schema, EnsembleKind kind,
                             std::string_view dataset_name, const ReportMeta& meta) {
  std::string out;
  {
    JsonWriter w;
    plot_header(w, "force", kind, dataset_name, meta);
    w.end_object();
    out += w.take();
    out.push_back('\n');
  }
  JsonWriter w;
  w.begin_object();
  w.key("type").value("force");
  w.key("instance").value(static_cast<std::uint64_t>(instance_index));
  w.key("base_value").value(explanation.base_value);
  w.key("phi").begin_object();
  for (std::size_t j = 0; j < explanation.phi.size(); ++j) {
    w.key(schema.feature_names[j]).value(explanation.phi[j]);
  }
  w.end_object();
  w.key("model_output").value(explanation.model_output);
  w.end_object();
  out += w.take();
  out.push_back('\n');
  return out;
}

std::string plot_dependence_jsonl(const std::vector<ShapExplanation>& explanations,
                                  const Dataset& instances, std::string_view feature,
                                  EnsembleKind kind, std::string_view dataset_name,
                                  const ReportMeta& meta) {
  const auto idx = instances.schema().feature_index(feature);
  if (!idx) throw SchemaError("unknown feature '" + std::string(feature) + "'");
  if (instances.n_rows() != explanations.size()) {
    throw ContractError("explanation count does not match instance count");
  }
  std::string out;
  {
    JsonWriter w;
    plot_header(w, "dependence", kind, dataset_name, meta);
    w.key("feature").value(feature);
    w.end_object();
    out += w.take();
    out.push_back('\n');
  }
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    JsonWriter w;
    w.begin_object();
    w.key("type").value("dependence");
    w.key("instance").value(static_cast<std::uint64_t>(i));
    w.key("feature_value").value(instances.at(i, *idx));
    w.key("shap_value").value(explanations[i].phi[*idx]);
    w.end_object();
    out += w.take();
    out.push_back('\n');
  }
  return out;
}

std::string ranking_json(const FeatureRanking& ranking,
                         const std::vector<std::string>& feature_names,
                         const ReportMeta& meta) {
  JsonWriter w;
  w.begin_object();
  write_meta(w, meta);
  w.key("ranking").begin_array();
  for (std::size_t k = 0; k < ranking.order.size(); ++k) {
    w.begin_object();
    w.key("rank").value(static_cast<std::uint64_t>(k + 1));
    w.key("feature").value(std::string_view(feature_names[ranking.order[k]]));
    w.key("mean_abs_shap").value(ranking.mean_abs_phi[k]);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  std::string out = w.take();
  out.push_back('\n');
  return out;
}

std::string case_study_text(const std::vector<ShapExplanation>& explanations,
                            const std::vector<std::size_t>& flagged,
                            const std::vector<double>& scores, const Dataset& instances,
                            EnsembleKind kind, int top_k, const ReportMeta& meta) {
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  const auto& names = instances.schema().feature_names;
  std::string out = "# ";
  out += meta_comment_line(meta, kind);
  out.push_back('\n');
  out += "# flagged " + fmt_int(static_cast<long long>(flagged.size())) + " of " +
         fmt_int(static_cast<long long>(explanations.size())) + " instances\n";
  if (kind == EnsembleKind::kIsolationForest) {
    out += "# ";
    out += kIforestSignNote;
    out.push_back('\n');
  }

  const std::size_t d = names.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(top_k), d);
  std::vector<std::size_t> order(d);
  for (std::size_t idx : flagged) {
    const ShapExplanation& e = explanations[idx];
    out.push_back('\n');
    out += "instance " + fmt_int(static_cast<long long>(idx));
    out += " score=" + fmt_double(scores[idx]);
    out += " output=" + fmt_double(e.model_output);
    out += " base=" + fmt_double(e.base_value);
    out.push_back('\n');

    for (std::size_t j = 0; j < d; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(e.phi[a]) > std::abs(e.phi[b]);
    });
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = order[r];
      out += "  " + fmt_int(static_cast<long long>(r + 1)) + ". " + names[j] + " = " +
             fmt_double(instances.at(idx, j)) + "  phi = " + fmt_double(e.phi[j]) + "\n";
    }
  }
  return out;
}

}  // namespace flowshap
