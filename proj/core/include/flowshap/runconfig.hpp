#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "flowshap/dataset.hpp"
#include "flowshap/pipeline.hpp"

namespace flowshap {

// One run = one schema, one preprocessing recipe, one model kind, one
// evaluation protocol, one seed. The seed has no wall-clock default: it must
// come from the config file or the command line.
struct RunConfig {
  FeatureSchema schema;
  bool schema_set = false;

  MissingPolicy missing = MissingPolicy::kDrop;
  bool select_enabled = false;
  SelectStrategy select = SelectStrategy::kDropConstant;
  double correlation_threshold = 0.99;

  ModelConfig model;

  double holdout_fraction = 0.8;
  int k_folds = 10;
  bool stratified = true;

  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";

  void validate() const;
};

RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Fixed-shape serialization of everything that determines results (schema,
// preprocessing, model, evaluation; not seed or out_dir), keys sorted, reals
// as shortest round-trip decimals. The config hash is FNV-1a 64 over these
// bytes, and the bundle embeds this exact object.
std::string canonical_config_json(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

// Re-serializes arbitrary JSON text into the same canonical form (sorted
// keys, same number formatting); used when round-tripping stored configs.
std::string canonicalize_json_text(const std::string& text, const std::string& origin);

std::string hash_hex(std::uint64_t h);

}  // namespace flowshap
