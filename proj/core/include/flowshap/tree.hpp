#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowshap {

// Binary decision tree stored as a flat array, root at index 0.
// feature < 0 marks a leaf. Interior nodes route x[feature] < threshold to
// the left child and x[feature] >= threshold (ties included) to the right.
// cover is the training mass that reached the node: hessian sum for boosted
// trees, sample count for forest and isolation trees.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int max_depth_reached = 0;

  bool operator==(const DecisionTree&) const = default;
};

enum class EnsembleKind { kGbt, kRandomForest, kIsolationForest };

std::string_view to_string(EnsembleKind k);
EnsembleKind ensemble_kind_from_string(std::string_view s);

// base_value holds the initial margin for gbt, 0 for random forest, and the
// effective subsample size psi for isolation forest.
struct Ensemble {
  EnsembleKind kind = EnsembleKind::kGbt;
  std::size_t n_features = 0;
  double base_value = 0.0;
  std::vector<DecisionTree> trees;

  bool operator==(const Ensemble&) const = default;
};

// Index of the leaf an instance reaches.
int descend_to_leaf(const DecisionTree& tree, std::span<const double> x);
double tree_leaf_value(const DecisionTree& tree, std::span<const double> x);

// Classifier output before any link transform: base + sum of tree outputs
// (log-odds margin) for gbt, mean of tree votes for random forest. Isolation
// forests score by path length instead, so they are rejected here.
double predict_ensemble_margin(const Ensemble& ens, std::span<const double> x);

// Mean of per-tree outputs without the base term (vote fraction for random
// forest, expected path length for isolation forest).
double ensemble_tree_mean(const Ensemble& ens, std::span<const double> x);

// Structural checks: child indices in range and forward-pointing, leaves
// childless, split features within n_features, covers positive.
void validate_ensemble(const Ensemble& ens);

}  // namespace flowshap
