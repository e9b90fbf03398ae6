#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flowshap/dataset.hpp"
#include "flowshap/tree.hpp"

namespace flowshap {

struct RfConfig {
  int n_trees = 100;
  int max_depth = 0;        // 0 means unlimited (capped at 64 levels)
  int max_features = 0;     // 0 means ceil(sqrt(n_features))
  int min_samples_leaf = 1;

  void validate() const;
  int effective_max_depth() const;
  std::size_t effective_max_features(std::size_t n_features) const;
  bool operator==(const RfConfig&) const = default;
};

// Gini impurity 1 - p0^2 - p1^2 of a two-class count pair.
double gini_impurity(std::size_t neg, std::size_t pos);

// Impurity decrease of a candidate split, weighted by child fractions.
double gini_decrease(std::size_t neg_l, std::size_t pos_l, std::size_t neg_r,
                     std::size_t pos_r);

// One CART-style tree on an explicit sample multiset (bootstrap indices).
// Feature subsets are drawn per node without replacement and examined in
// ascending index order; splits need a strictly positive impurity decrease
// and min_samples_leaf on both sides. Leaf value is the majority class, a
// tie voting class 0. Node cover is the sample count that reached it.
DecisionTree train_rf_tree(const Dataset& ds, const std::vector<std::uint32_t>& sample,
                           const RfConfig& cfg, std::uint64_t tree_seed);

// Bagged ensemble: each tree draws n rows with replacement from a stream
// seeded by mix_seed(mix_seed(seed, "rf"), tree_index).
Ensemble train_rf(const Dataset& ds, const RfConfig& cfg, std::uint64_t seed);

// Fraction of trees voting anomaly, and the class under "fraction > 0.5"
// (so an exact tie votes normal).
std::pair<int, double> predict_rf(const Ensemble& ens, std::span<const double> x);

// Bootstrap index draw shared with tests: n draws in [0, n).
std::vector<std::uint32_t> bootstrap_sample(std::size_t n, std::uint64_t seed);

}  // namespace flowshap
