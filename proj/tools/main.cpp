#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowshap/bundle.hpp"
#include "flowshap/dataset.hpp"
#include "flowshap/errors.hpp"
#include "flowshap/jsonw.hpp"
#include "flowshap/metrics.hpp"
#include "flowshap/numfmt.hpp"
#include "flowshap/pipeline.hpp"
#include "flowshap/prng.hpp"
#include "flowshap/reports.hpp"
#include "flowshap/runconfig.hpp"
#include "flowshap/shap.hpp"
#include "flowshap/synthetic.hpp"

namespace fs = std::filesystem;

namespace flowshap {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open output file for writing: " + path.string());
  out << content;
  if (!out.flush()) throw DataError("failed writing output file: " + path.string());
  std::cerr << "wrote " << path.string() << "\n";
}

EnsembleKind kind_from_flag(const std::string& s) {
  if (s == "gbt") return EnsembleKind::kGbt;
  if (s == "rf" || s == "random_forest") return EnsembleKind::kRandomForest;
  if (s == "iforest" || s == "isolation_forest") return EnsembleKind::kIsolationForest;
  throw ConfigError("unknown model kind '" + s + "'");
}

struct RunOpts {
  std::string config;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> model;
};

// Config file first, flags on top, then full validation. The seed has no
// default: a run that states no seed is rejected rather than irreproducible.
RunConfig resolve_config(const RunOpts& opts) {
  RunConfig cfg = load_run_config(opts.config);
  if (opts.model) cfg.model.kind = kind_from_flag(*opts.model);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.out_dir = *opts.out;
  cfg.validate();
  if (!cfg.seed) {
    throw ConfigError("seed is required: set 'seed' in the config or pass --seed");
  }
  return cfg;
}

ReportMeta meta_for(const RunConfig& cfg) {
  return ReportMeta{hash_hex(config_hash(cfg)), *cfg.seed};
}

std::string stamp(const ReportMeta& meta) {
  return "config_hash=" + meta.config_hash_hex + " seed=" +
         fmt_int(static_cast<long long>(meta.seed));
}

// Features from the configured schema that the CSV actually has, in config
// order. Preprocessing may have removed columns; training accepts the
// surviving subset but never invents columns.
FeatureSchema schema_present_in(const FeatureSchema& schema, const std::string& text,
                                const std::string& origin) {
  const auto records = parse_csv_records(text);
  if (records.empty()) throw DataError("empty CSV: " + origin);
  const std::set<std::string> have(records[0].begin(), records[0].end());
  FeatureSchema eff = schema;
  eff.feature_names.clear();
  for (const auto& name : schema.feature_names) {
    if (have.count(name)) eff.feature_names.push_back(name);
  }
  if (eff.feature_names.empty()) {
    throw SchemaError("none of the configured feature columns are present in " + origin);
  }
  return eff;
}

std::string sanitize_filename(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out;
}

void cmd_synth(std::uint64_t rows, std::uint64_t features, double contamination,
               std::uint64_t seed, const std::string& out_dir) {
  SynthConfig sc;
  sc.n_rows = rows;
  sc.n_features = features;
  sc.contamination = contamination;

  JsonWriter w;
  w.begin_object();
  w.key("contamination").value(sc.contamination);
  w.key("n_features").value(static_cast<std::uint64_t>(sc.n_features));
  w.key("n_rows").value(static_cast<std::uint64_t>(sc.n_rows));
  w.end_object();
  const ReportMeta meta{hash_hex(component_tag(w.str())), seed};

  Dataset ds = generate_synthetic(sc, seed);
  std::cerr << "generated " << ds.n_rows() << " records (" << synth_anomaly_count(sc)
            << " anomalies, " << ds.n_features() << " features)\n";
  write_file(fs::path(out_dir) / "synthetic.csv", dataset_to_csv(ds, stamp(meta)));
}

void cmd_preprocess(const RunOpts& opts) {
  const RunConfig cfg = resolve_config(opts);
  if (!cfg.schema_set) {
    throw ConfigError("preprocess requires schema.features in the config");
  }
  const ReportMeta meta = meta_for(cfg);

  Dataset ds = load_csv_from_string(read_file(opts.input), cfg.schema, cfg.missing,
                                    true, opts.input);
  if (cfg.select_enabled) {
    ds = select_features(ds, cfg.select, cfg.correlation_threshold);
  }
  std::cerr << "cleaned " << ds.n_rows() << " records, " << ds.n_features()
            << " features\n";

  const fs::path out(cfg.out_dir);
  write_file(out / "cleaned.csv", dataset_to_csv(ds, stamp(meta)));

  const LogStep* load = nullptr;
  const LogStep* select = nullptr;
  for (const auto& step : ds.preprocessing_log()) {
    if (step.step == "load_csv") load = &step;
    if (step.step == "select_features") select = &step;
  }
  if (load == nullptr) throw ContractError("preprocessing log is missing the load step");

  const auto count = [&](const char* key) -> std::string {
    const std::string* v = load->find(key);
    return v != nullptr ? *v : "0";
  };

  JsonWriter w;
  w.begin_object();
  w.key("config_hash").value(std::string_view(meta.config_hash_hex));
  w.key("seed").value(meta.seed);
  w.key("missing_policy").value(to_string(cfg.missing));
  w.key("rows_in").raw_value(count("rows_in"));
  w.key("rows_dropped_missing_label").raw_value(count("rows_dropped_missing_label"));
  w.key("rows_dropped_missing").raw_value(count("rows_dropped_missing"));
  w.key("cells_imputed").raw_value(count("cells_imputed"));
  w.key("rows_out").raw_value(count("rows_out"));
  w.key("features_in").value(static_cast<std::uint64_t>(cfg.schema.feature_names.size()));
  w.key("features_out").value(static_cast<std::uint64_t>(ds.n_features()));
  w.key("removed_features").begin_array();
  if (select != nullptr) {
    const std::string* removed = select->find("removed");
    if (removed != nullptr && !removed->empty()) {
      std::size_t start = 0;
      while (start <= removed->size()) {
        const std::size_t comma = removed->find(',', start);
        const std::size_t end = comma == std::string::npos ? removed->size() : comma;
        w.value(std::string_view(*removed).substr(start, end - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
  }
  w.end_array();
  w.end_object();
  write_file(out / "preprocess_report.json", w.take() + "\n");
}

void cmd_train(const RunOpts& opts) {
  const RunConfig cfg = resolve_config(opts);
  if (!cfg.schema_set) throw ConfigError("train requires schema.features in the config");
  const ReportMeta meta = meta_for(cfg);

  const std::string text = read_file(opts.input);
  const FeatureSchema eff = schema_present_in(cfg.schema, text, opts.input);
  const Dataset ds = load_csv_from_string(text, eff, cfg.missing, true, opts.input);

  auto [train_ds, test_ds] =
      split_train_test(ds, cfg.holdout_fraction, *cfg.seed, cfg.stratified);
  std::cerr << "training " << to_string(cfg.model.kind) << " on " << train_ds.n_rows()
            << " records (" << test_ds.n_rows() << " held out)\n";
  const TrainedModel model = train_model(train_ds, cfg.model, *cfg.seed);

  ModelBundle bundle;
  bundle.ensemble = model.ensemble;
  bundle.normalizer = model.normalizer;
  bundle.schema = model.schema;
  bundle.config_json = canonical_config_json(cfg);
  bundle.seed = *cfg.seed;

  const fs::path out(cfg.out_dir);
  write_file(out / "bundle.json", bundle_to_json(bundle));
  write_file(out / "test_split.csv", dataset_to_csv(test_ds, stamp(meta) + " split=test"));

  JsonWriter w;
  w.begin_object();
  w.key("config_hash").value(std::string_view(meta.config_hash_hex));
  w.key("seed").value(meta.seed);
  w.key("model").value(to_string(cfg.model.kind));
  w.key("n_train").value(static_cast<std::uint64_t>(train_ds.n_rows()));
  w.key("n_test").value(static_cast<std::uint64_t>(test_ds.n_rows()));
  w.key("n_trees").value(static_cast<std::uint64_t>(model.ensemble.trees.size()));
  if (cfg.model.kind == EnsembleKind::kGbt) {
    w.key("train_loss").begin_array();
    for (double loss : model.gbt_losses) w.value(loss);
    w.end_array();
  }
  w.end_object();
  write_file(out / "train_log.json", w.take() + "\n");
}

TrainedModel model_from_bundle(const ModelBundle& b) {
  TrainedModel model;
  model.ensemble = b.ensemble;
  model.normalizer = b.normalizer;
  model.schema = b.schema;
  return model;
}

void cmd_evaluate(const std::string& bundle_path, const std::string& input,
                  const std::string& out_dir) {
  const ModelBundle bundle = load_bundle(bundle_path);
  const RunConfig cfg = parse_run_config(bundle.config_json, bundle_path + "#config");
  const TrainedModel model = model_from_bundle(bundle);
  const ReportMeta meta{hash_hex(bundle_config_hash(bundle)), bundle.seed};

  const Dataset test =
      load_csv_from_string(read_file(input), bundle.schema, cfg.missing, true, input);
  const double threshold = cfg.model.classification_threshold();
  std::cerr << "evaluating " << to_string(bundle.ensemble.kind) << " on "
            << test.n_rows() << " records at threshold " << fmt_double(threshold)
            << "\n";

  FoldResult fold;
  fold.fold = 0;
  fold.report = compute_metrics(evaluate_model(model, test, threshold));
  const CvSummary summary = summarize_folds({fold});
  const std::string json = metrics_report_json("holdout", bundle.ensemble.kind,
                                               threshold, {fold}, summary, meta);
  write_file(fs::path(out_dir) / "metrics.json", json);
  std::cout << json;
}

void cmd_crossval(const RunOpts& opts) {
  const RunConfig cfg = resolve_config(opts);
  if (!cfg.schema_set) throw ConfigError("crossval requires schema.features in the config");
  const ReportMeta meta = meta_for(cfg);

  const std::string text = read_file(opts.input);
  const FeatureSchema eff = schema_present_in(cfg.schema, text, opts.input);
  const Dataset ds = load_csv_from_string(text, eff, cfg.missing, true, opts.input);

  std::cerr << "running " << cfg.k_folds << "-fold cross-validation of "
            << to_string(cfg.model.kind) << " on " << ds.n_rows() << " records\n";
  const CvResult cv = kfold_cv(ds, cfg.model, cfg.k_folds, *cfg.seed, cfg.stratified);
  const double threshold = cfg.model.classification_threshold();
  const std::string json = metrics_report_json("kfold", cfg.model.kind, threshold,
                                               cv.folds, cv.summary, meta);
  write_file(fs::path(cfg.out_dir) / "metrics_cv.json", json);
  std::cout << json;
}

void cmd_explain(const std::string& bundle_path, const std::string& input, int top_k,
                 std::optional<double> quantile, const std::string& out_dir) {
  if (top_k < 1) throw ConfigError("--top-k must be at least 1");
  if (quantile && !(*quantile > 0.0 && *quantile < 1.0)) {
    throw ConfigError("--quantile must be in (0,1)");
  }
  const ModelBundle bundle = load_bundle(bundle_path);
  const RunConfig cfg = parse_run_config(bundle.config_json, bundle_path + "#config");
  const TrainedModel model = model_from_bundle(bundle);
  const ReportMeta meta{hash_hex(bundle_config_hash(bundle)), bundle.seed};
  const EnsembleKind kind = bundle.ensemble.kind;

  const Dataset ds =
      load_csv_from_string(read_file(input), bundle.schema, cfg.missing, false, input);
  if (ds.n_rows() == 0) throw DataError("no records to explain in " + input);

  std::cerr << "explaining " << ds.n_rows() << " records with "
            << bundle.ensemble.trees.size() << " trees\n";
  std::vector<ShapExplanation> explanations(ds.n_rows());
  std::vector<double> scores(ds.n_rows());
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    explanations[i] = explain_instance(model, ds.row(i));
    scores[i] = model_score(model, ds.row(i));
  }

  std::vector<std::size_t> flagged;
  const double threshold = cfg.model.classification_threshold();
  if (quantile) {
    std::vector<std::size_t> order(ds.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] > scores[b];
    });
    const auto take = std::min<std::size_t>(
        static_cast<std::size_t>(std::llround(*quantile * static_cast<double>(ds.n_rows()))),
        ds.n_rows());
    flagged.assign(order.begin(), order.begin() + static_cast<long>(take));
    std::sort(flagged.begin(), flagged.end());
  } else {
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
      if (classify(model, ds.row(i), threshold) == 1) flagged.push_back(i);
    }
  }
  std::cerr << "flagged " << flagged.size() << " of " << ds.n_rows() << " records\n";

  const fs::path out(out_dir);
  const std::string dataset_name = fs::path(input).filename().string();
  write_file(out / "shap_values.csv", shap_csv(explanations, bundle.schema, kind, meta));
  write_file(out / "case_study.txt",
             case_study_text(explanations, flagged, scores, ds, kind, top_k, meta));
  write_file(out / "plot_summary.jsonl",
             plot_summary_jsonl(explanations, ds, kind, dataset_name, meta));

  const std::size_t focus = flagged.empty() ? 0 : flagged.front();
  write_file(out / "plot_force.jsonl",
             plot_force_jsonl(explanations[focus], focus, bundle.schema, kind,
                              dataset_name, meta));

  const FeatureRanking ranking = rank_by_mean_abs(explanations, ds.n_features());
  const std::string& top_feature = bundle.schema.feature_names[ranking.order[0]];
  write_file(out / ("plot_dependence_" + sanitize_filename(top_feature) + ".jsonl"),
             plot_dependence_jsonl(explanations, ds, top_feature, kind, dataset_name,
                                   meta));
}

ReportMeta meta_from_comment(const std::string& comment) {
  ReportMeta meta{"unknown", 0};
  std::istringstream in(comment);
  std::string token;
  while (in >> token) {
    if (token.rfind("config_hash=", 0) == 0) {
      meta.config_hash_hex = token.substr(12);
    } else if (token.rfind("seed=", 0) == 0) {
      if (auto v = parse_double(token.substr(5)); v && *v >= 0) {
        meta.seed = static_cast<std::uint64_t>(*v);
      }
    }
  }
  return meta;
}

void cmd_rank(const std::string& input, const std::string& out_dir) {
  const ShapCsvData data = load_shap_csv(input);
  std::vector<ShapExplanation> explanations(data.phi.size());
  for (std::size_t i = 0; i < data.phi.size(); ++i) {
    explanations[i].phi = data.phi[i];
    explanations[i].base_value = data.base_value[i];
    explanations[i].model_output = data.model_output[i];
  }
  const FeatureRanking ranking =
      rank_by_mean_abs(explanations, data.feature_names.size());
  const std::string json =
      ranking_json(ranking, data.feature_names, meta_from_comment(data.meta_comment));
  write_file(fs::path(out_dir) / "ranking.json", json);
  std::cout << json;
}

}  // namespace
}  // namespace flowshap

int main(int argc, char** argv) {
  using namespace flowshap;

  CLI::App app{"anomaly detection on network flow features with exact tree SHAP"};
  app.require_subcommand(1);

  std::uint64_t synth_rows = 5000;
  std::uint64_t synth_features = 10;
  double synth_contamination = 0.05;
  std::uint64_t synth_seed = 0;
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "generate a planted-anomaly dataset");
  synth->add_option("--rows", synth_rows, "records to generate")->capture_default_str();
  synth->add_option("--features", synth_features, "feature count")->capture_default_str();
  synth->add_option("--contamination", synth_contamination, "anomaly fraction")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "deterministic seed")->required();
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();

  const auto add_run_opts = [](CLI::App* sub, RunOpts& opts) {
    sub->add_option("--config", opts.config, "run config JSON")->required();
    sub->add_option("--input", opts.input, "input CSV")->required();
    sub->add_option("--seed", opts.seed, "seed override");
    sub->add_option("--out", opts.out, "output directory override");
    sub->add_option("--model", opts.model, "model kind override (gbt|rf|iforest)");
  };

  RunOpts pre_opts;
  auto* preprocess =
      app.add_subcommand("preprocess", "clean a raw CSV and report what changed");
  add_run_opts(preprocess, pre_opts);

  RunOpts train_opts;
  auto* train = app.add_subcommand("train", "split, train, and save a model bundle");
  add_run_opts(train, train_opts);

  std::string eval_bundle, eval_input, eval_out = ".";
  auto* evaluate = app.add_subcommand("evaluate", "score a bundle against labeled data");
  evaluate->add_option("--bundle", eval_bundle, "model bundle JSON")->required();
  evaluate->add_option("--input", eval_input, "labeled test CSV")->required();
  evaluate->add_option("--out", eval_out, "output directory")->capture_default_str();

  RunOpts cv_opts;
  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation");
  add_run_opts(crossval, cv_opts);

  std::string explain_bundle, explain_input, explain_out = ".";
  int explain_top_k = 3;
  std::optional<double> explain_quantile;
  auto* explain =
      app.add_subcommand("explain", "attribute predictions and report flagged records");
  explain->add_option("--bundle", explain_bundle, "model bundle JSON")->required();
  explain->add_option("--input", explain_input, "CSV of records to explain")->required();
  explain->add_option("--top-k", explain_top_k, "features per case-study entry")
      ->capture_default_str();
  explain->add_option("--quantile", explain_quantile,
                      "flag the top fraction by score instead of thresholding");
  explain->add_option("--out", explain_out, "output directory")->capture_default_str();

  std::string rank_input, rank_out = ".";
  auto* rank = app.add_subcommand("rank", "rank features by mean |attribution|");
  rank->add_option("--input", rank_input, "attribution CSV from explain")->required();
  rank->add_option("--out", rank_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (synth->parsed()) {
      cmd_synth(synth_rows, synth_features, synth_contamination, synth_seed, synth_out);
    } else if (preprocess->parsed()) {
      cmd_preprocess(pre_opts);
    } else if (train->parsed()) {
      cmd_train(train_opts);
    } else if (evaluate->parsed()) {
      cmd_evaluate(eval_bundle, eval_input, eval_out);
    } else if (crossval->parsed()) {
      cmd_crossval(cv_opts);
    } else if (explain->parsed()) {
      cmd_explain(explain_bundle, explain_input, explain_top_k, explain_quantile,
                  explain_out);
    } else if (rank->parsed()) {
      cmd_rank(rank_input, rank_out);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
