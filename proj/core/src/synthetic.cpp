#include "flowshap/synthetic.hpp"

#include <cmath>
#include <utility>

#include "flowshap/errors.hpp"
#include "flowshap/numfmt.hpp"
#include "flowshap/prng.hpp"

namespace flowshap {

namespace {

void check_config(const SynthConfig& cfg) {
  if (cfg.n_rows < 2) throw ConfigError("synthetic generator needs at least 2 rows");
  if (cfg.n_features < 2) throw ConfigError("synthetic generator needs at least 2 features");
  if (!(cfg.contamination > 0.0 && cfg.contamination < 0.5)) {
    throw ConfigError("contamination must be in (0, 0.5)");
  }
}

}  // namespace

std::size_t synth_anomaly_count(const SynthConfig& cfg) {
  check_config(cfg);
  auto k = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.n_rows) * cfg.contamination));
  if (k < 1) k = 1;
  if (k > cfg.n_rows - 1) k = cfg.n_rows - 1;
  return k;
}

Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  const std::size_t k = synth_anomaly_count(cfg);
  const std::size_t n = cfg.n_rows;
  const std::size_t d = cfg.n_features;

  SplitMix64 rng(mix_seed(seed, component_tag("synth")));

  std::vector<double> values(n * d);
  std::vector<std::uint8_t> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool anomaly = i < k;
    labels[i] = anomaly ? 1 : 0;
    for (std::size_t j = 0; j < d; ++j) {
      double center = kInlierCenter;
      double sigma = anomaly ? kAnomalySigma : kInlierSigma;
      if (anomaly && j == 0) center += kAnomalyShift;
      values[i * d + j] = center + sigma * rng.next_gaussian();
    }
  }

  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    for (std::size_t c = 0; c < d; ++c) {
      std::swap(values[(i - 1) * d + c], values[j * d + c]);
    }
    std::swap(labels[i - 1], labels[j]);
  }

  FeatureSchema schema;
  schema.feature_names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) schema.feature_names.push_back("f" + fmt_int(static_cast<long long>(j)));
  schema.label_column = "label";
  schema.positive_label = "1";

  LogStep step{"generate_synthetic", {}};
  step.params.emplace_back("n_rows", fmt_int(static_cast<long long>(n)));
  step.params.emplace_back("n_features", fmt_int(static_cast<long long>(d)));
  step.params.emplace_back("contamination", fmt_double(cfg.contamination));
  step.params.emplace_back("anomaly_count", fmt_int(static_cast<long long>(k)));
  step.params.emplace_back("seed", fmt_int(static_cast<long long>(seed)));

  return Dataset(std::move(schema), std::move(values), std::move(labels), true, {std::move(step)});
}

}  // namespace flowshap
