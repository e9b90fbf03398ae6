#pragma once

#include <cstdint>
#include <string>

#include "flowshap/dataset.hpp"
#include "flowshap/normalizer.hpp"
#include "flowshap/tree.hpp"

namespace flowshap {

inline constexpr int kBundleFormatVersion = 1;

// Everything needed to score and explain: the ensemble, the normalizer
// fitted on its training split, the feature schema, the canonical config
// object that produced it, and the seed. Serialization is deterministic:
// saving the same bundle twice, or loading and re-saving, gives identical
// bytes, and reals survive the round trip exactly.
struct ModelBundle {
  Ensemble ensemble;
  NormalizerParams normalizer;
  FeatureSchema schema;
  std::string config_json;   // canonical JSON object text
  std::uint64_t seed = 0;
  int format_version = kBundleFormatVersion;
};

std::string bundle_to_json(const ModelBundle& bundle);
void save_bundle(const ModelBundle& bundle, const std::string& path);

ModelBundle parse_bundle(const std::string& text, const std::string& origin);
ModelBundle load_bundle(const std::string& path);

// FNV-1a 64 over the canonical config text.
std::uint64_t bundle_config_hash(const ModelBundle& bundle);

}  // namespace flowshap
