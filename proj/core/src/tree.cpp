#include "flowshap/tree.hpp"

#include "flowshap/errors.hpp"
#include "flowshap/numfmt.hpp"

namespace flowshap {

std::string_view to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::kGbt: return "gbt";
    case EnsembleKind::kRandomForest: return "random_forest";
    case EnsembleKind::kIsolationForest: return "isolation_forest";
  }
  throw ContractError("invalid ensemble kind");
}

EnsembleKind ensemble_kind_from_string(std::string_view s) {
  if (s == "gbt") return EnsembleKind::kGbt;
  if (s == "random_forest") return EnsembleKind::kRandomForest;
  if (s == "isolation_forest") return EnsembleKind::kIsolationForest;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

int descend_to_leaf(const DecisionTree& tree, std::span<const double> x) {
  if (tree.nodes.empty()) throw ContractError("empty tree");
  int idx = 0;
  while (!tree.nodes[static_cast<size_t>(idx)].is_leaf()) {
    const TreeNode& node = tree.nodes[static_cast<size_t>(idx)];
    idx = x[static_cast<size_t>(node.feature)] < node.threshold ? node.left : node.right;
  }
  return idx;
}

double tree_leaf_value(const DecisionTree& tree, std::span<const double> x) {
  return tree.nodes[static_cast<size_t>(descend_to_leaf(tree, x))].value;
}

double ensemble_tree_mean(const Ensemble& ens, std::span<const double> x) {
  if (ens.trees.empty()) throw ContractError("ensemble has no trees");
  if (x.size() != ens.n_features) {
    throw SchemaError("model expects " + fmt_int(static_cast<long long>(ens.n_features)) +
                      " features, got " + fmt_int(static_cast<long long>(x.size())));
  }
  double sum = 0.0;
  for (const auto& t : ens.trees) sum += tree_leaf_value(t, x);
  return sum / static_cast<double>(ens.trees.size());
}

double predict_ensemble_margin(const Ensemble& ens, std::span<const double> x) {
  if (ens.kind == EnsembleKind::kIsolationForest) {
    throw ContractError("margin is undefined for isolation forests; score by path length");
  }
  if (ens.trees.empty()) throw ContractError("ensemble has no trees");
  if (x.size() != ens.n_features) {
    throw SchemaError("model expects " + fmt_int(static_cast<long long>(ens.n_features)) +
                      " features, got " + fmt_int(static_cast<long long>(x.size())));
  }
  if (ens.kind == EnsembleKind::kGbt) {
    double sum = ens.base_value;
    for (const auto& t : ens.trees) sum += tree_leaf_value(t, x);
    return sum;
  }
  return ensemble_tree_mean(ens, x);
}

void validate_ensemble(const Ensemble& ens) {
  if (ens.n_features == 0) throw DataError("model declares zero features");
  if (ens.trees.empty()) throw DataError("model has no trees");
  for (const auto& tree : ens.trees) {
    if (tree.nodes.empty()) throw DataError("model contains an empty tree");
    const int n = static_cast<int>(tree.nodes.size());
    for (int i = 0; i < n; ++i) {
      const TreeNode& node = tree.nodes[static_cast<size_t>(i)];
      if (!(node.cover > 0.0)) throw DataError("tree node has non-positive cover");
      if (node.is_leaf()) {
        if (node.left != -1 || node.right != -1) {
          throw DataError("leaf node has children");
        }
        continue;
      }
      if (static_cast<size_t>(node.feature) >= ens.n_features) {
        throw DataError("split feature index out of range");
      }
      if (node.left <= i || node.left >= n || node.right <= i || node.right >= n) {
        throw DataError("tree child index out of range");
      }
    }
  }
}

}  // namespace flowshap
