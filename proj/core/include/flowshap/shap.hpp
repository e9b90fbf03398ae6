#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowshap/tree.hpp"

namespace flowshap {

// Additive attribution of one prediction: base_value + sum(phi) equals
// model_output, which is the gbt margin, the random forest vote fraction, or
// the isolation forest expected path length E[h] (for the latter, lower
// output means more anomalous, so negative phi pushes toward anomaly).
// Features a model never splits on get exactly 0.
struct ShapExplanation {
  std::vector<double> phi;
  double base_value = 0.0;
  double model_output = 0.0;
};

// Cover-weighted mean of leaf values: the model output expected under the
// training distribution the covers record.
double tree_expected_value(const DecisionTree& tree);
double ensemble_expected_value(const Ensemble& ens);

// Conditional expectation of a tree given the feature subset `known`: known
// features route by the decision rule, unknown splits average both children
// weighted by cover fractions.
double cover_conditional_expectation(const DecisionTree& tree, std::span<const double> x,
                                     const std::vector<bool>& known);

// Ensemble output when only `known` features are observed. With all features
// known this is the explained output (margin, vote fraction, or expected
// path length); with none it is the expected value.
double conditional_margin(const Ensemble& ens, std::span<const double> x,
                          const std::vector<bool>& known);

// Exact path-dependent attribution in O(trees * leaves * depth^2).
ShapExplanation tree_shap(const Ensemble& ens, std::span<const double> x);

// Shapley values of the conditional-expectation game by subset enumeration,
// O(2^d); identical quantity tree_shap computes, practical for small d.
std::vector<double> brute_force_shapley(const Ensemble& ens, std::span<const double> x);

struct FeatureRanking {
  std::vector<std::size_t> order;       // feature indices, most important first
  std::vector<double> mean_abs_phi;     // aligned with order
};

// Ranks by mean |phi| over a batch, ties to the lower feature index.
FeatureRanking rank_by_mean_abs(const std::vector<ShapExplanation>& explanations,
                                std::size_t n_features);

}  // namespace flowshap
