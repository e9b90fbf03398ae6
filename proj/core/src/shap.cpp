#include "flowshap/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "flowshap/errors.hpp"

namespace flowshap {

double tree_expected_value(const DecisionTree& tree) {
  std::vector<double> expect(tree.nodes.size());
  for (std::size_t i = tree.nodes.size(); i-- > 0;) {
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) {
      expect[i] = node.value;
      continue;
    }
    const TreeNode& l = tree.nodes[static_cast<std::size_t>(node.left)];
    const TreeNode& r = tree.nodes[static_cast<std::size_t>(node.right)];
    expect[i] = (expect[static_cast<std::size_t>(node.left)] * l.cover +
                 expect[static_cast<std::size_t>(node.right)] * r.cover) /
                node.cover;
  }
  return expect[0];
}

namespace {

double ensemble_scale(const Ensemble& ens) {
  return ens.kind == EnsembleKind::kGbt ? 1.0
                                        : 1.0 / static_cast<double>(ens.trees.size());
}

// Only gbt carries an additive offset; for isolation forests base_value
// stores psi and contributes nothing to the explained output.
double ensemble_offset(const Ensemble& ens) {
  return ens.kind == EnsembleKind::kGbt ? ens.base_value : 0.0;
}

double explained_output(const Ensemble& ens, std::span<const double> x) {
  if (ens.kind == EnsembleKind::kIsolationForest) return ensemble_tree_mean(ens, x);
  return predict_ensemble_margin(ens, x);
}

}  // namespace

double ensemble_expected_value(const Ensemble& ens) {
  if (ens.trees.empty()) throw ContractError("ensemble has no trees");
  double sum = 0.0;
  for (const auto& t : ens.trees) sum += tree_expected_value(t);
  return ensemble_offset(ens) + ensemble_scale(ens) * sum;
}

namespace {

double conditional_node(const DecisionTree& tree, std::span<const double> x,
                        const std::vector<bool>& known, std::size_t idx) {
  const TreeNode& node = tree.nodes[idx];
  if (node.is_leaf()) return node.value;
  const auto f = static_cast<std::size_t>(node.feature);
  if (known[f]) {
    const std::size_t next =
        x[f] < node.threshold ? static_cast<std::size_t>(node.left)
                              : static_cast<std::size_t>(node.right);
    return conditional_node(tree, x, known, next);
  }
  const TreeNode& l = tree.nodes[static_cast<std::size_t>(node.left)];
  const TreeNode& r = tree.nodes[static_cast<std::size_t>(node.right)];
  return (l.cover * conditional_node(tree, x, known, static_cast<std::size_t>(node.left)) +
          r.cover * conditional_node(tree, x, known, static_cast<std::size_t>(node.right))) /
         node.cover;
}

}  // namespace

double cover_conditional_expectation(const DecisionTree& tree, std::span<const double> x,
                                     const std::vector<bool>& known) {
  return conditional_node(tree, x, known, 0);
}

double conditional_margin(const Ensemble& ens, std::span<const double> x,
                          const std::vector<bool>& known) {
  if (ens.trees.empty()) throw ContractError("ensemble has no trees");
  double sum = 0.0;
  for (const auto& t : ens.trees) sum += cover_conditional_expectation(t, x, known);
  return ensemble_offset(ens) + ensemble_scale(ens) * sum;
}

namespace {

// Lundberg's polynomial-time exact algorithm: a path of unique features with
// the fraction of subsets that flow down ("zero") and the indicator of the
// instance's own route ("one"), extended at each split and unwound when a
// feature repeats.
struct PathElement {
  int feature_index;
  double zero_fraction;
  double one_fraction;
  double pweight;
};

void extend_path(PathElement* unique_path, unsigned unique_depth, double zero_fraction,
                 double one_fraction, int feature_index) {
  unique_path[unique_depth] = {feature_index, zero_fraction, one_fraction,
                               unique_depth == 0 ? 1.0 : 0.0};
  for (int i = static_cast<int>(unique_depth) - 1; i >= 0; --i) {
    unique_path[i + 1].pweight += one_fraction * unique_path[i].pweight *
                                  static_cast<double>(i + 1) /
                                  static_cast<double>(unique_depth + 1);
    unique_path[i].pweight = zero_fraction * unique_path[i].pweight *
                             static_cast<double>(unique_depth - static_cast<unsigned>(i)) /
                             static_cast<double>(unique_depth + 1);
  }
}

void unwind_path(PathElement* unique_path, unsigned unique_depth, unsigned path_index) {
  const double one_fraction = unique_path[path_index].one_fraction;
  const double zero_fraction = unique_path[path_index].zero_fraction;
  double next_one_portion = unique_path[unique_depth].pweight;
  for (int i = static_cast<int>(unique_depth) - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = unique_path[i].pweight;
      unique_path[i].pweight = next_one_portion * static_cast<double>(unique_depth + 1) /
                               (static_cast<double>(i + 1) * one_fraction);
      next_one_portion = tmp - unique_path[i].pweight * zero_fraction *
                                   static_cast<double>(unique_depth - static_cast<unsigned>(i)) /
                                   static_cast<double>(unique_depth + 1);
    } else {
      unique_path[i].pweight =
          unique_path[i].pweight * static_cast<double>(unique_depth + 1) /
          (zero_fraction * static_cast<double>(unique_depth - static_cast<unsigned>(i)));
    }
  }
  for (unsigned i = path_index; i < unique_depth; ++i) {
    unique_path[i].feature_index = unique_path[i + 1].feature_index;
    unique_path[i].zero_fraction = unique_path[i + 1].zero_fraction;
    unique_path[i].one_fraction = unique_path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* unique_path, unsigned unique_depth,
                        unsigned path_index) {
  const double one_fraction = unique_path[path_index].one_fraction;
  const double zero_fraction = unique_path[path_index].zero_fraction;
  double next_one_portion = unique_path[unique_depth].pweight;
  double total = 0.0;
  for (int i = static_cast<int>(unique_depth) - 1; i >= 0; --i) {
    const double frac = static_cast<double>(unique_depth - static_cast<unsigned>(i)) /
                        static_cast<double>(unique_depth + 1);
    if (one_fraction != 0.0) {
      const double tmp = next_one_portion * static_cast<double>(unique_depth + 1) /
                         (static_cast<double>(i + 1) * one_fraction);
      total += tmp;
      next_one_portion = unique_path[i].pweight - tmp * zero_fraction * frac;
    } else {
      total += (unique_path[i].pweight / zero_fraction) / frac;
    }
  }
  return total;
}

void shap_recurse(const DecisionTree& tree, std::span<const double> x, double* phi,
                  unsigned node_index, unsigned unique_depth,
                  PathElement* parent_unique_path, double parent_zero_fraction,
                  double parent_one_fraction, int parent_feature_index) {
  PathElement* unique_path = parent_unique_path + unique_depth + 1;
  std::copy(parent_unique_path, parent_unique_path + unique_depth + 1, unique_path);
  extend_path(unique_path, unique_depth, parent_zero_fraction, parent_one_fraction,
              parent_feature_index);

  const TreeNode& node = tree.nodes[node_index];
  if (node.is_leaf()) {
    for (unsigned i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(unique_path, unique_depth, i);
      const PathElement& el = unique_path[i];
      phi[el.feature_index] += w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }

  const auto f = static_cast<std::size_t>(node.feature);
  const unsigned hot_index = x[f] < node.threshold ? static_cast<unsigned>(node.left)
                                                   : static_cast<unsigned>(node.right);
  const unsigned cold_index = hot_index == static_cast<unsigned>(node.left)
                                  ? static_cast<unsigned>(node.right)
                                  : static_cast<unsigned>(node.left);
  const double hot_zero_fraction = tree.nodes[hot_index].cover / node.cover;
  const double cold_zero_fraction = tree.nodes[cold_index].cover / node.cover;

  double incoming_zero_fraction = 1.0;
  double incoming_one_fraction = 1.0;
  unsigned path_index = 0;
  for (; path_index <= unique_depth; ++path_index) {
    if (unique_path[path_index].feature_index == node.feature) break;
  }
  if (path_index != unique_depth + 1) {
    incoming_zero_fraction = unique_path[path_index].zero_fraction;
    incoming_one_fraction = unique_path[path_index].one_fraction;
    unwind_path(unique_path, unique_depth, path_index);
    unique_depth -= 1;
  }

  shap_recurse(tree, x, phi, hot_index, unique_depth + 1, unique_path,
               hot_zero_fraction * incoming_zero_fraction, incoming_one_fraction,
               node.feature);
  shap_recurse(tree, x, phi, cold_index, unique_depth + 1, unique_path,
               cold_zero_fraction * incoming_zero_fraction, 0.0, node.feature);
}

void tree_shap_single(const DecisionTree& tree, std::span<const double> x, double* phi) {
  const unsigned maxd = static_cast<unsigned>(tree.max_depth_reached) + 2;
  std::vector<PathElement> unique_path_data((maxd * (maxd + 1)) / 2);
  shap_recurse(tree, x, phi, 0, 0, unique_path_data.data(), 1.0, 1.0, -1);
}

}  // namespace

ShapExplanation tree_shap(const Ensemble& ens, std::span<const double> x) {
  if (ens.trees.empty()) throw ContractError("ensemble has no trees");
  if (x.size() != ens.n_features) {
    throw SchemaError("instance width does not match model feature count");
  }
  const std::size_t d = ens.n_features;
  std::vector<double> phi(d, 0.0);
  for (const auto& t : ens.trees) tree_shap_single(t, x, phi.data());

  ShapExplanation out;
  const double scale = ensemble_scale(ens);
  out.phi.resize(d);
  for (std::size_t j = 0; j < d; ++j) out.phi[j] = scale * phi[j];
  out.base_value = ensemble_expected_value(ens);
  out.model_output = explained_output(ens, x);
  return out;
}

std::vector<double> brute_force_shapley(const Ensemble& ens, std::span<const double> x) {
  const std::size_t d = ens.n_features;
  if (d > 15) throw ContractError("subset enumeration is limited to 15 features");
  if (x.size() != d) throw SchemaError("instance width does not match model feature count");

  const std::size_t n_masks = std::size_t{1} << d;
  std::vector<double> value(n_masks);
  std::vector<bool> known(d);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    for (std::size_t j = 0; j < d; ++j) known[j] = (mask >> j) & 1;
    value[mask] = conditional_margin(ens, x, known);
  }

  std::vector<double> factorial(d + 1, 1.0);
  for (std::size_t k = 1; k <= d; ++k) {
    factorial[k] = factorial[k - 1] * static_cast<double>(k);
  }

  std::vector<double> phi(d, 0.0);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t j = 0; j < d; ++j) {
      if ((mask >> j) & 1) continue;
      const double weight =
          factorial[size] * factorial[d - size - 1] / factorial[d];
      phi[j] += weight * (value[mask | (std::size_t{1} << j)] - value[mask]);
    }
  }
  return phi;
}

FeatureRanking rank_by_mean_abs(const std::vector<ShapExplanation>& explanations,
                                std::size_t n_features) {
  if (explanations.empty()) throw DataError("cannot rank features from zero explanations");
  std::vector<double> mean_abs(n_features, 0.0);
  for (const auto& e : explanations) {
    if (e.phi.size() != n_features) {
      throw ContractError("explanation width does not match feature count");
    }
    for (std::size_t j = 0; j < n_features; ++j) mean_abs[j] += std::abs(e.phi[j]);
  }
  for (double& v : mean_abs) v /= static_cast<double>(explanations.size());

  FeatureRanking ranking;
  ranking.order.resize(n_features);
  std::iota(ranking.order.begin(), ranking.order.end(), 0u);
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](std::size_t a, std::size_t b) { return mean_abs[a] > mean_abs[b]; });
  ranking.mean_abs_phi.resize(n_features);
  for (std::size_t k = 0; k < n_features; ++k) {
    ranking.mean_abs_phi[k] = mean_abs[ranking.order[k]];
  }
  return ranking;
}

}  // namespace flowshap
