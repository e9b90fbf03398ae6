#include "flowshap/bundle.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowshap/errors.hpp"
#include "flowshap/jsonw.hpp"
#include "flowshap/numfmt.hpp"
#include "flowshap/prng.hpp"
#include "flowshap/runconfig.hpp"

namespace flowshap {

using nlohmann::json;

std::string bundle_to_json(const ModelBundle& bundle) {
  JsonWriter w;
  w.begin_object();
  w.key("format_version").value(bundle.format_version);
  w.key("kind").value(to_string(bundle.ensemble.kind));
  w.key("base_value").value(bundle.ensemble.base_value);

  w.key("trees").begin_array();
  for (const auto& tree : bundle.ensemble.trees) {
    w.begin_object();
    w.key("max_depth_reached").value(tree.max_depth_reached);
    w.key("nodes").begin_array();
    for (const auto& node : tree.nodes) {
      w.begin_object();
      if (node.is_leaf()) {
        w.key("leaf").begin_object();
        w.key("v").value(node.value);
        w.key("cover").value(node.cover);
        w.end_object();
      } else {
        w.key("split").begin_object();
        w.key("f").value(node.feature);
        w.key("t").value(node.threshold);
        w.key("cover").value(node.cover);
        w.key("l").value(node.left);
        w.key("r").value(node.right);
        w.end_object();
      }
      w.end_object();
    }
    w.end_array();
    w.end_object();
  }
  w.end_array();

  w.key("normalizer").begin_object();
  w.key("method").value(to_string(bundle.normalizer.method));
  w.key("stats").begin_array();
  for (const auto& st : bundle.normalizer.stats) {
    w.begin_array();
    w.value(st.a);
    w.value(st.b);
    w.end_array();
  }
  w.end_array();
  w.end_object();

  w.key("schema").begin_object();
  w.key("features").begin_array();
  for (const auto& f : bundle.schema.feature_names) w.value(std::string_view(f));
  w.end_array();
  w.key("label").value(std::string_view(bundle.schema.label_column));
  w.key("positive_label").value(std::string_view(bundle.schema.positive_label));
  w.end_object();

  w.key("config").raw_value(bundle.config_json.empty() ? "{}" : bundle.config_json);
  w.key("seed").value(bundle.seed);
  w.end_object();
  std::string out = w.take();
  out.push_back('\n');
  return out;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << bundle_to_json(bundle);
  if (!out) throw DataError("write failed: " + path);
}

namespace {

double require_number(const json& obj, const char* key, const std::string& origin) {
  if (!obj.contains(key) || !obj.at(key).is_number()) {
    throw SchemaError(std::string("model file missing numeric '") + key + "' in " + origin);
  }
  return obj.at(key).get<double>();
}

int require_int(const json& obj, const char* key, const std::string& origin) {
  if (!obj.contains(key) || !(obj.at(key).is_number_integer() || obj.at(key).is_number_unsigned())) {
    throw SchemaError(std::string("model file missing integer '") + key + "' in " + origin);
  }
  return obj.at(key).get<int>();
}

std::string require_string(const json& obj, const char* key, const std::string& origin) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw SchemaError(std::string("model file missing string '") + key + "' in " + origin);
  }
  return obj.at(key).get<std::string>();
}

const json& require_member(const json& obj, const char* key, json::value_t type,
                           const std::string& origin) {
  if (!obj.contains(key) || obj.at(key).type() != type) {
    throw SchemaError(std::string("model file missing '") + key + "' in " + origin);
  }
  return obj.at(key);
}

}  // namespace

ModelBundle parse_bundle(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in " + origin + ": " + e.what());
  }
  if (!doc.is_object()) throw SchemaError("model file root must be an object in " + origin);

  ModelBundle bundle;
  bundle.format_version = require_int(doc, "format_version", origin);
  if (bundle.format_version != kBundleFormatVersion) {
    throw DataError("unsupported format_version " + fmt_int(bundle.format_version) +
                    " in " + origin + " (supported: " + fmt_int(kBundleFormatVersion) + ")");
  }
  bundle.ensemble.kind = ensemble_kind_from_string(require_string(doc, "kind", origin));
  bundle.ensemble.base_value = require_number(doc, "base_value", origin);

  const json& schema = require_member(doc, "schema", json::value_t::object, origin);
  const json& features = require_member(schema, "features", json::value_t::array, origin);
  for (const json& f : features) {
    if (!f.is_string()) throw SchemaError("schema feature names must be strings in " + origin);
    bundle.schema.feature_names.push_back(f.get<std::string>());
  }
  bundle.schema.label_column = require_string(schema, "label", origin);
  bundle.schema.positive_label = require_string(schema, "positive_label", origin);
  bundle.schema.validate();
  bundle.ensemble.n_features = bundle.schema.feature_names.size();

  const json& trees = require_member(doc, "trees", json::value_t::array, origin);
  for (const json& jt : trees) {
    if (!jt.is_object()) throw SchemaError("tree entries must be objects in " + origin);
    DecisionTree tree;
    tree.max_depth_reached = require_int(jt, "max_depth_reached", origin);
    const json& nodes = require_member(jt, "nodes", json::value_t::array, origin);
    for (const json& jn : nodes) {
      TreeNode node;
      if (jn.is_object() && jn.contains("leaf")) {
        const json& leaf = jn.at("leaf");
        node.value = require_number(leaf, "v", origin);
        node.cover = require_number(leaf, "cover", origin);
      } else if (jn.is_object() && jn.contains("split")) {
        const json& split = jn.at("split");
        node.feature = require_int(split, "f", origin);
        node.threshold = require_number(split, "t", origin);
        node.cover = require_number(split, "cover", origin);
        node.left = require_int(split, "l", origin);
        node.right = require_int(split, "r", origin);
        if (node.feature < 0) throw SchemaError("split feature must be non-negative in " + origin);
      } else {
        throw SchemaError("tree node must hold 'split' or 'leaf' in " + origin);
      }
      tree.nodes.push_back(node);
    }
    bundle.ensemble.trees.push_back(std::move(tree));
  }

  const json& norm = require_member(doc, "normalizer", json::value_t::object, origin);
  bundle.normalizer.method = norm_method_from_string(require_string(norm, "method", origin));
  const json& stats = require_member(norm, "stats", json::value_t::array, origin);
  for (const json& st : stats) {
    if (!st.is_array() || st.size() != 2 || !st[0].is_number() || !st[1].is_number()) {
      throw SchemaError("normalizer stats must be [a,b] number pairs in " + origin);
    }
    bundle.normalizer.stats.push_back({st[0].get<double>(), st[1].get<double>()});
  }
  if (bundle.normalizer.stats.size() != bundle.schema.feature_names.size()) {
    throw SchemaError("normalizer width does not match schema in " + origin);
  }

  const json& config = require_member(doc, "config", json::value_t::object, origin);
  bundle.config_json = canonicalize_json_text(config.dump(), origin);

  if (!doc.contains("seed")) throw SchemaError("model file missing 'seed' in " + origin);
  const json& seed = doc.at("seed");
  if (seed.is_number_unsigned()) {
    bundle.seed = seed.get<std::uint64_t>();
  } else if (seed.is_number_integer() && seed.get<std::int64_t>() >= 0) {
    bundle.seed = static_cast<std::uint64_t>(seed.get<std::int64_t>());
  } else {
    throw SchemaError("model file 'seed' must be a non-negative integer in " + origin);
  }

  validate_ensemble(bundle.ensemble);
  return bundle;
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bundle(buf.str(), path);
}

std::uint64_t bundle_config_hash(const ModelBundle& bundle) {
  return component_tag(bundle.config_json);
}

}  // namespace flowshap
