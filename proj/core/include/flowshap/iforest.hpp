#pragma once

#include <cstdint>
#include <vector>

#include "flowshap/dataset.hpp"
#include "flowshap/tree.hpp"

namespace flowshap {

struct IforestConfig {
  int n_trees = 100;
  int psi = 256;                   // per-tree subsample size, capped at n
  double score_threshold = 0.5;

  void validate() const;
  bool operator==(const IforestConfig&) const = default;
};

// Average path length of an unsuccessful BST search over m points:
// 2(ln(m-1) + 0.5772156649) - 2(m-1)/m for m >= 2, else 0.
double expected_path_correction(std::size_t m);

struct IforestTrainResult {
  Ensemble ensemble;
  std::size_t psi_effective = 0;
  int max_depth = 0;
};

// Isolation forest: each tree grows on psi rows sampled without replacement
// (stream seeded by mix_seed(mix_seed(seed, "iforest"), tree_index)), splits
// a uniformly chosen non-constant feature at a uniform threshold strictly
// inside its (min, max), and stops at ceil(log2(psi)), single rows, or
// all-identical rows. Leaf value is depth + expected_path_correction(size);
// node cover is the subsample count that reached it.
IforestTrainResult train_iforest(const Dataset& ds, const IforestConfig& cfg,
                                 std::uint64_t seed);

// Mean adjusted path length over trees.
double expected_path_length(const Ensemble& ens, std::span<const double> x);

// s = 2^(-E[h]/c(psi)); higher is more anomalous, 0.5 at the expectation.
// The forest's base_value stores the effective psi.
double anomaly_score_from_path(double expected_path, std::size_t psi_effective);
double anomaly_score(const Ensemble& ens, std::span<const double> x);

}  // namespace flowshap
