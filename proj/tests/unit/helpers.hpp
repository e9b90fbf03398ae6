#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "flowshap/dataset.hpp"
#include "flowshap/prng.hpp"
#include "flowshap/tree.hpp"

namespace flowshap::testing {

inline FeatureSchema schema_for(std::size_t d) {
  FeatureSchema s;
  for (std::size_t j = 0; j < d; ++j) s.feature_names.push_back("f" + std::to_string(j));
  s.label_column = "label";
  s.positive_label = "1";
  return s;
}

inline Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels = {}) {
  const std::size_t d = rows.empty() ? 1 : rows[0].size();
  std::vector<double> values;
  for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  std::vector<std::uint8_t> lbl(labels.begin(), labels.end());
  return Dataset(schema_for(d), std::move(values), std::move(lbl), !labels.empty(), {});
}

inline DecisionTree leaf_tree(double value, double cover = 1.0) {
  DecisionTree t;
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, value, cover});
  return t;
}

inline DecisionTree stump(int feature, double threshold, double left_value,
                          double right_value, double left_cover = 1.0,
                          double right_cover = 1.0) {
  DecisionTree t;
  t.max_depth_reached = 1;
  t.nodes.push_back(
      TreeNode{feature, threshold, 1, 2, 0.0, left_cover + right_cover});
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, left_value, left_cover});
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, right_value, right_cover});
  return t;
}

inline Ensemble one_tree(EnsembleKind kind, std::size_t d, DecisionTree tree,
                         double base = 0.0) {
  Ensemble e;
  e.kind = kind;
  e.n_features = d;
  e.base_value = base;
  e.trees.push_back(std::move(tree));
  return e;
}

inline int build_random_node(DecisionTree& t, SplitMix64& rng, std::size_t d, int depth,
                             int max_depth, double cover) {
  const int idx = static_cast<int>(t.nodes.size());
  t.nodes.push_back({});
  t.max_depth_reached = std::max(t.max_depth_reached, depth);
  if (depth >= max_depth || rng.next_unit() < 0.3) {
    t.nodes[idx].value = rng.next_unit() * 4.0 - 2.0;
    t.nodes[idx].cover = cover;
    return idx;
  }
  const int feature = static_cast<int>(rng.next_below(d));
  const double threshold = rng.next_unit();
  const double frac = 0.15 + 0.7 * rng.next_unit();
  const int left = build_random_node(t, rng, d, depth + 1, max_depth, cover * frac);
  const int right =
      build_random_node(t, rng, d, depth + 1, max_depth, cover * (1.0 - frac));
  TreeNode& n = t.nodes[idx];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  n.cover = cover;
  return idx;
}

// Structurally valid ensemble with random splits in [0,1]^d; covers conserve
// by construction and features repeat along paths when d is small.
inline Ensemble random_ensemble(std::uint64_t seed, std::size_t d, int max_trees,
                                int max_depth) {
  SplitMix64 rng(seed);
  Ensemble e;
  e.n_features = d;
  e.base_value = rng.next_unit() - 0.5;
  const int n_trees = 1 + static_cast<int>(rng.next_below(
                              static_cast<std::uint64_t>(max_trees)));
  for (int i = 0; i < n_trees; ++i) {
    DecisionTree tree;
    build_random_node(tree, rng, d, 0, max_depth, 50.0 + rng.next_unit() * 100.0);
    e.trees.push_back(std::move(tree));
  }
  return e;
}

inline std::vector<double> random_point(SplitMix64& rng, std::size_t d) {
  std::vector<double> x(d);
  for (auto& v : x) v = rng.next_unit();
  return x;
}

}  // namespace flowshap::testing
