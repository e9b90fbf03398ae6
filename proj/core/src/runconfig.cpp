#include "flowshap/runconfig.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flowshap/errors.hpp"
#include "flowshap/jsonw.hpp"
#include "flowshap/numfmt.hpp"
#include "flowshap/prng.hpp"

namespace flowshap {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& path, const std::string& why) {
  throw ConfigError("config key '" + path + "' " + why);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (k == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("unknown config key '" + path + k + "'");
  }
}

double get_double(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad_key(path + key, "must be a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    bad_key(path + key, "must be an integer");
  }
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad_key(path + key, "must be a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) bad_key(path + key, "must be a string");
  return v.get<std::string>();
}

EnsembleKind parse_kind(const std::string& s) {
  if (s == "gbt") return EnsembleKind::kGbt;
  if (s == "rf" || s == "random_forest") return EnsembleKind::kRandomForest;
  if (s == "iforest" || s == "isolation_forest") return EnsembleKind::kIsolationForest;
  throw ConfigError("unknown model kind '" + s + "'");
}

void parse_schema(const json& obj, RunConfig& cfg) {
  check_keys(obj, "schema.", {"features", "label", "positive_label"});
  if (!obj.contains("features") || !obj.at("features").is_array()) {
    throw ConfigError("config key 'schema.features' must be an array of strings");
  }
  cfg.schema.feature_names.clear();
  for (const json& f : obj.at("features")) {
    if (!f.is_string()) {
      throw ConfigError("config key 'schema.features' must be an array of strings");
    }
    cfg.schema.feature_names.push_back(f.get<std::string>());
  }
  cfg.schema.label_column = get_string(obj, "schema.", "label", "label");
  cfg.schema.positive_label = get_string(obj, "schema.", "positive_label", "1");
  cfg.schema.validate();
  cfg.schema_set = true;
}

void parse_preprocessing(const json& obj, RunConfig& cfg) {
  check_keys(obj, "preprocessing.",
             {"missing_policy", "select", "correlation_threshold", "normalization"});
  cfg.missing = missing_policy_from_string(
      get_string(obj, "preprocessing.", "missing_policy", "drop"));
  const std::string sel = get_string(obj, "preprocessing.", "select", "none");
  if (sel == "none") {
    cfg.select_enabled = false;
  } else if (sel == "drop_constant") {
    cfg.select_enabled = true;
    cfg.select = SelectStrategy::kDropConstant;
  } else if (sel == "correlation_prune") {
    cfg.select_enabled = true;
    cfg.select = SelectStrategy::kCorrelationPrune;
  } else {
    throw ConfigError("unknown feature selection strategy '" + sel + "'");
  }
  cfg.correlation_threshold =
      get_double(obj, "preprocessing.", "correlation_threshold", 0.99);
  if (!(cfg.correlation_threshold > 0.0 && cfg.correlation_threshold <= 1.0)) {
    throw ConfigError("correlation_threshold must be in (0,1]");
  }
  cfg.model.norm_method = norm_method_from_string(
      get_string(obj, "preprocessing.", "normalization", "minmax"));
}

void parse_model(const json& obj, RunConfig& cfg) {
  cfg.model.kind = parse_kind(get_string(obj, "model.", "kind", "gbt"));
  switch (cfg.model.kind) {
    case EnsembleKind::kGbt: {
      check_keys(obj, "model.",
                 {"kind", "n_rounds", "eta", "max_depth", "lambda", "alpha", "gamma",
                  "min_child_weight", "base_score"});
      GbtConfig& g = cfg.model.gbt;
      g.n_rounds = get_int(obj, "model.", "n_rounds", g.n_rounds);
      g.eta = get_double(obj, "model.", "eta", g.eta);
      g.max_depth = get_int(obj, "model.", "max_depth", g.max_depth);
      g.lambda = get_double(obj, "model.", "lambda", g.lambda);
      g.alpha = get_double(obj, "model.", "alpha", g.alpha);
      g.gamma = get_double(obj, "model.", "gamma", g.gamma);
      g.min_child_weight = get_double(obj, "model.", "min_child_weight", g.min_child_weight);
      g.base_score = get_double(obj, "model.", "base_score", g.base_score);
      break;
    }
    case EnsembleKind::kRandomForest: {
      check_keys(obj, "model.",
                 {"kind", "n_trees", "max_depth", "max_features", "min_samples_leaf"});
      RfConfig& r = cfg.model.rf;
      r.n_trees = get_int(obj, "model.", "n_trees", r.n_trees);
      r.max_depth = get_int(obj, "model.", "max_depth", r.max_depth);
      r.max_features = get_int(obj, "model.", "max_features", r.max_features);
      r.min_samples_leaf = get_int(obj, "model.", "min_samples_leaf", r.min_samples_leaf);
      break;
    }
    case EnsembleKind::kIsolationForest: {
      check_keys(obj, "model.", {"kind", "n_trees", "psi", "score_threshold"});
      IforestConfig& f = cfg.model.iforest;
      f.n_trees = get_int(obj, "model.", "n_trees", f.n_trees);
      f.psi = get_int(obj, "model.", "psi", f.psi);
      f.score_threshold = get_double(obj, "model.", "score_threshold", f.score_threshold);
      break;
    }
  }
}

void parse_evaluation(const json& obj, RunConfig& cfg) {
  check_keys(obj, "evaluation.", {"holdout_fraction", "k_folds", "stratified", "threshold"});
  cfg.holdout_fraction = get_double(obj, "evaluation.", "holdout_fraction", 0.8);
  cfg.k_folds = get_int(obj, "evaluation.", "k_folds", 10);
  cfg.stratified = get_bool(obj, "evaluation.", "stratified", true);
  cfg.model.threshold = get_double(obj, "evaluation.", "threshold", 0.5);
}

void canonical_value(JsonWriter& w, const json& v);

void canonical_object(JsonWriter& w, const json& obj) {
  w.begin_object();
  // nlohmann's default object iteration is already key-sorted.
  for (const auto& [k, v] : obj.items()) {
    w.key(k);
    canonical_value(w, v);
  }
  w.end_object();
}

void canonical_value(JsonWriter& w, const json& v) {
  switch (v.type()) {
    case json::value_t::object: canonical_object(w, v); break;
    case json::value_t::array:
      w.begin_array();
      for (const json& e : v) canonical_value(w, e);
      w.end_array();
      break;
    case json::value_t::string: w.value(std::string_view(v.get_ref<const std::string&>())); break;
    case json::value_t::boolean: w.value(v.get<bool>()); break;
    case json::value_t::number_integer: w.value(static_cast<std::int64_t>(v.get<std::int64_t>())); break;
    case json::value_t::number_unsigned: w.value(v.get<std::uint64_t>()); break;
    case json::value_t::number_float: w.value(v.get<double>()); break;
    default: w.null();
  }
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must be in (0,1)");
  }
  if (k_folds < 2) throw ConfigError("k_folds must be at least 2");
  if (schema_set) schema.validate();
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in " + origin + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object in " + origin);
  check_keys(doc, "", {"schema", "preprocessing", "model", "evaluation", "seed", "out_dir"});

  RunConfig cfg;
  if (doc.contains("schema")) parse_schema(doc.at("schema"), cfg);
  if (doc.contains("preprocessing")) parse_preprocessing(doc.at("preprocessing"), cfg);
  if (doc.contains("model")) parse_model(doc.at("model"), cfg);
  if (doc.contains("evaluation")) parse_evaluation(doc.at("evaluation"), cfg);
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (s.is_number_unsigned()) {
      cfg.seed = s.get<std::uint64_t>();
    } else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) {
      cfg.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    } else {
      throw ConfigError("config key 'seed' must be a non-negative integer");
    }
  }
  cfg.out_dir = get_string(doc, "", "out_dir", ".");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path);
}

std::string canonical_config_json(const RunConfig& cfg) {
  JsonWriter w;
  w.begin_object();

  w.key("evaluation").begin_object();
  w.key("holdout_fraction").value(cfg.holdout_fraction);
  w.key("k_folds").value(cfg.k_folds);
  w.key("stratified").value(cfg.stratified);
  w.key("threshold").value(cfg.model.threshold);
  w.end_object();

  w.key("model").begin_object();
  switch (cfg.model.kind) {
    case EnsembleKind::kGbt:
      w.key("alpha").value(cfg.model.gbt.alpha);
      w.key("base_score").value(cfg.model.gbt.base_score);
      w.key("eta").value(cfg.model.gbt.eta);
      w.key("gamma").value(cfg.model.gbt.gamma);
      w.key("kind").value("gbt");
      w.key("lambda").value(cfg.model.gbt.lambda);
      w.key("max_depth").value(cfg.model.gbt.max_depth);
      w.key("min_child_weight").value(cfg.model.gbt.min_child_weight);
      w.key("n_rounds").value(cfg.model.gbt.n_rounds);
      break;
    case EnsembleKind::kRandomForest:
      w.key("kind").value("random_forest");
      w.key("max_depth").value(cfg.model.rf.max_depth);
      w.key("max_features").value(cfg.model.rf.max_features);
      w.key("min_samples_leaf").value(cfg.model.rf.min_samples_leaf);
      w.key("n_trees").value(cfg.model.rf.n_trees);
      break;
    case EnsembleKind::kIsolationForest:
      w.key("kind").value("isolation_forest");
      w.key("n_trees").value(cfg.model.iforest.n_trees);
      w.key("psi").value(cfg.model.iforest.psi);
      w.key("score_threshold").value(cfg.model.iforest.score_threshold);
      break;
  }
  w.end_object();

  w.key("preprocessing").begin_object();
  w.key("correlation_threshold").value(cfg.correlation_threshold);
  w.key("missing_policy").value(to_string(cfg.missing));
  w.key("normalization").value(to_string(cfg.model.norm_method));
  w.key("select").value(!cfg.select_enabled ? "none"
                        : cfg.select == SelectStrategy::kDropConstant
                            ? "drop_constant"
                            : "correlation_prune");
  w.end_object();

  w.key("schema").begin_object();
  w.key("features").begin_array();
  for (const auto& f : cfg.schema.feature_names) w.value(std::string_view(f));
  w.end_array();
  w.key("label").value(std::string_view(cfg.schema.label_column));
  w.key("positive_label").value(std::string_view(cfg.schema.positive_label));
  w.end_object();

  w.end_object();
  return w.take();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  return component_tag(canonical_config_json(cfg));
}

std::string canonicalize_json_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in " + origin + ": " + e.what());
  }
  JsonWriter w;
  canonical_value(w, doc);
  return w.take();
}

std::string hash_hex(std::uint64_t h) {
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace flowshap
