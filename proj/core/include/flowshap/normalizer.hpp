#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowshap/dataset.hpp"

namespace flowshap {

enum class NormMethod { kMinMax, kZScore };

std::string_view to_string(NormMethod m);
NormMethod norm_method_from_string(std::string_view s);

// Per-feature statistics: {min, max} for min-max scaling, {mean, stddev}
// for z-score standardization (population stddev, divisor n).
struct FeatureStats {
  double a = 0.0;
  double b = 0.0;

  bool operator==(const FeatureStats&) const = default;
};

struct NormalizerParams {
  NormMethod method = NormMethod::kMinMax;
  std::vector<FeatureStats> stats;

  bool operator==(const NormalizerParams&) const = default;
};

NormalizerParams fit_normalizer(const Dataset& ds, NormMethod method);

// Transforms every feature column. A constant feature (zero range or zero
// stddev) maps to 0.0 everywhere. Appends an "apply_normalizer" step to the
// preprocessing log. Width mismatch between stats and dataset is a schema
// error.
Dataset apply_normalizer(const Dataset& ds, const NormalizerParams& params);

void normalize_row(std::span<const double> in, std::span<double> out,
                   const NormalizerParams& params);
std::vector<double> normalize_row(std::span<const double> in, const NormalizerParams& params);

// Serialization helpers shared by the preprocessing log and the model bundle:
// stats encode as "a,b;a,b;..." with shortest round-trip decimals.
std::string normalizer_stats_to_string(const NormalizerParams& params);
NormalizerParams normalizer_params_from_strings(std::string_view method,
                                                std::string_view stats);
NormalizerParams normalizer_params_from_log(const LogStep& step);

}  // namespace flowshap
