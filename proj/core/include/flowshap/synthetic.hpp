#pragma once

#include <cstddef>
#include <cstdint>

#include "flowshap/dataset.hpp"

namespace flowshap {

// Gaussian mixture with a planted anomaly signal. Inliers draw every feature
// from N(kInlierCenter, kInlierSigma). Anomalies draw feature 0 from
// N(kInlierCenter + kAnomalyShift, kAnomalySigma) and the remaining features
// from N(kInlierCenter, kAnomalySigma): displaced along one axis, more
// dispersed on all of them. Feature 0 therefore carries the class signal.
inline constexpr double kInlierCenter = 5.0;
inline constexpr double kInlierSigma = 1.0;
inline constexpr double kAnomalyShift = 10.0;
inline constexpr double kAnomalySigma = 2.0;

struct SynthConfig {
  std::size_t n_rows = 5000;
  std::size_t n_features = 10;
  double contamination = 0.05;
};

// Number of anomaly rows for a given configuration: round(n * contamination),
// clamped to [1, n-1].
std::size_t synth_anomaly_count(const SynthConfig& cfg);

// Deterministic for a given (cfg, seed): the anomaly rows are generated,
// then all rows are shuffled into a fixed order. Columns are named
// f0..f{d-1}; the label column is "label" with positive label "1".
Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace flowshap
