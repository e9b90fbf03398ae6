#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "flowshap/errors.hpp"
#include "flowshap/pipeline.hpp"
#include "flowshap/prng.hpp"
#include "flowshap/shap.hpp"
#include "flowshap/synthetic.hpp"
#include "flowshap/tree.hpp"

#include "helpers.hpp"

using namespace flowshap;
using testing::leaf_tree;
using testing::one_tree;
using testing::random_ensemble;
using testing::random_point;
using testing::stump;

TEST_CASE("stump with equal covers attributes f(x) - E[f] to its feature") {
  const Ensemble e =
      one_tree(EnsembleKind::kGbt, 3, stump(0, 0.5, -1.0, 1.0, 50.0, 50.0));
  const ShapExplanation ex = tree_shap(e, std::vector<double>{0.2, 9.0, 9.0});
  CHECK(ex.base_value == 0.0);
  CHECK(ex.phi[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(ex.phi[1] == 0.0);
  CHECK(ex.phi[2] == 0.0);
  CHECK(ex.model_output == -1.0);
}

TEST_CASE("symmetric features receive equal attributions") {
  // f0 and f1 appear in mirrored positions with equal covers; for an input
  // symmetric in both, the Shapley symmetry axiom forces phi[0] == phi[1].
  DecisionTree t;
  t.max_depth_reached = 2;
  t.nodes = {
      TreeNode{0, 0.5, 1, 2, 0.0, 100.0},
      TreeNode{1, 0.5, 3, 4, 0.0, 50.0},
      TreeNode{1, 0.5, 5, 6, 0.0, 50.0},
      TreeNode{-1, 0.0, -1, -1, 0.0, 25.0},
      TreeNode{-1, 0.0, -1, -1, 1.0, 25.0},
      TreeNode{-1, 0.0, -1, -1, 1.0, 25.0},
      TreeNode{-1, 0.0, -1, -1, 4.0, 25.0},
  };
  const Ensemble e = one_tree(EnsembleKind::kGbt, 2, t);
  const ShapExplanation ex = tree_shap(e, std::vector<double>{0.7, 0.7});
  CHECK(std::abs(ex.phi[0] - ex.phi[1]) <= 1e-12);
  CHECK(ex.base_value + ex.phi[0] + ex.phi[1] ==
        doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("features outside every split get exactly zero") {
  Ensemble e = one_tree(EnsembleKind::kGbt, 4, stump(0, 0.3, 1.0, 2.0, 30.0, 70.0));
  e.trees.push_back(stump(0, 0.6, -1.0, 0.5, 40.0, 60.0));
  const ShapExplanation ex = tree_shap(e, std::vector<double>{0.5, 0.1, 0.2, 0.3});
  CHECK(ex.phi[1] == 0.0);
  CHECK(ex.phi[2] == 0.0);
  CHECK(ex.phi[3] == 0.0);
}

TEST_CASE("single-leaf model is a constant game") {
  const Ensemble e = one_tree(EnsembleKind::kGbt, 2, leaf_tree(0.7, 10.0));
  const ShapExplanation ex = tree_shap(e, std::vector<double>{1.0, 2.0});
  CHECK(ex.phi[0] == 0.0);
  CHECK(ex.phi[1] == 0.0);
  CHECK(ex.base_value == 0.7);
  const std::vector<double> brute = brute_force_shapley(e, std::vector<double>{1.0, 2.0});
  CHECK(brute[0] == 0.0);
  CHECK(brute[1] == 0.0);
}

TEST_CASE("expected value is the cover-weighted leaf mean") {
  const DecisionTree t = stump(0, 0.5, -1.0, 1.0, 25.0, 75.0);
  CHECK(tree_expected_value(t) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("conditional expectation routes known features and averages unknown") {
  const DecisionTree t = stump(0, 0.5, -1.0, 1.0, 25.0, 75.0);
  const std::vector<double> x{0.2};
  CHECK(cover_conditional_expectation(t, x, {true}) == -1.0);
  CHECK(cover_conditional_expectation(t, x, {false}) ==
        doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("brute force satisfies the efficiency axiom") {
  SplitMix64 rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    Ensemble e = random_ensemble(1000 + static_cast<std::uint64_t>(trial), 4, 5, 3);
    const std::vector<double> x = random_point(rng, 4);
    const std::vector<double> phi = brute_force_shapley(e, x);
    const std::vector<bool> all(4, true);
    const std::vector<bool> none(4, false);
    const double v_all = conditional_margin(e, x, all);
    const double v_none = conditional_margin(e, x, none);
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    CHECK(total == doctest::Approx(v_all - v_none).epsilon(1e-9));
  }
}

TEST_CASE("tree_shap matches subset-enumeration Shapley values to 1e-9") {
  SplitMix64 rng(2412);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + trial % 5;  // 2..6 features
    const Ensemble e =
        random_ensemble(7000 + static_cast<std::uint64_t>(trial), d, 10, 4);
    const std::vector<double> x = random_point(rng, d);
    const ShapExplanation fast = tree_shap(e, x);
    const std::vector<double> slow = brute_force_shapley(e, x);
    for (std::size_t j = 0; j < d; ++j) {
      CHECK(std::abs(fast.phi[j] - slow[j]) <= 1e-9);
    }
  }
}

TEST_CASE("additivity holds on every random ensemble") {
  SplitMix64 rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + trial % 6;
    const Ensemble e =
        random_ensemble(500 + static_cast<std::uint64_t>(trial), d, 8, 5);
    const std::vector<double> x = random_point(rng, d);
    const ShapExplanation ex = tree_shap(e, x);
    const double total = std::accumulate(ex.phi.begin(), ex.phi.end(), ex.base_value);
    CHECK(total == doctest::Approx(ex.model_output).epsilon(1e-9));
  }
}

TEST_CASE("attributions are additive across trees") {
  const DecisionTree a = stump(0, 0.4, -1.0, 2.0, 30.0, 70.0);
  const DecisionTree b = stump(1, 0.6, 0.5, -0.25, 60.0, 40.0);
  Ensemble both = one_tree(EnsembleKind::kGbt, 2, a);
  both.trees.push_back(b);
  const std::vector<double> x{0.1, 0.9};
  const ShapExplanation ex_both = tree_shap(both, x);
  const ShapExplanation ex_a = tree_shap(one_tree(EnsembleKind::kGbt, 2, a), x);
  const ShapExplanation ex_b = tree_shap(one_tree(EnsembleKind::kGbt, 2, b), x);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(ex_both.phi[j] ==
          doctest::Approx(ex_a.phi[j] + ex_b.phi[j]).epsilon(1e-12));
  }
}

TEST_CASE("brute force rejects wide feature spaces") {
  const Ensemble e = one_tree(EnsembleKind::kGbt, 16, leaf_tree(1.0));
  CHECK_THROWS_AS(brute_force_shapley(e, std::vector<double>(16, 0.0)),
                  ContractError);
}

TEST_CASE("forest attributions explain the vote fraction") {
  Ensemble rf;
  rf.kind = EnsembleKind::kRandomForest;
  rf.n_features = 1;
  rf.trees = {stump(0, 0.5, 0.0, 1.0, 50.0, 50.0), leaf_tree(1.0, 100.0)};
  const ShapExplanation ex = tree_shap(rf, std::vector<double>{0.9});
  CHECK(ex.model_output == 1.0);
  CHECK(ex.base_value == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(ex.phi[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("isolation attributions explain expected path length") {
  SynthConfig cfg;
  cfg.n_rows = 300;
  cfg.n_features = 4;
  cfg.contamination = 0.05;
  const Dataset ds = generate_synthetic(cfg, 61);
  ModelConfig mc;
  mc.kind = EnsembleKind::kIsolationForest;
  mc.iforest.n_trees = 25;
  const TrainedModel model = train_model(ds, mc, 61);
  std::size_t anomaly = 0;
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    if (ds.label(i) == 1) {
      anomaly = i;
      break;
    }
  }
  const ShapExplanation ex = explain_instance(model, ds.row(anomaly));
  CHECK(ex.model_output ==
        doctest::Approx(model_explained_output(model, ds.row(anomaly))).epsilon(1e-12));
  const double total = std::accumulate(ex.phi.begin(), ex.phi.end(), ex.base_value);
  CHECK(total == doctest::Approx(ex.model_output).epsilon(1e-9));
  // Shorter-than-average paths make the displaced feature's phi negative.
  CHECK(ex.phi[0] < 0.0);
}

TEST_CASE("ranking means and order for a known matrix") {
  std::vector<ShapExplanation> rows(2);
  rows[0].phi = {1.0, -2.0};
  rows[1].phi = {3.0, 0.0};
  const FeatureRanking r = rank_by_mean_abs(rows, 2);
  CHECK(r.order == std::vector<std::size_t>{0, 1});
  CHECK(r.mean_abs_phi[0] == 2.0);
  CHECK(r.mean_abs_phi[1] == 1.0);
}

TEST_CASE("all-zero attributions rank by feature index") {
  std::vector<ShapExplanation> rows(3);
  for (auto& row : rows) row.phi = {0.0, 0.0, 0.0};
  const FeatureRanking r = rank_by_mean_abs(rows, 3);
  CHECK(r.order == std::vector<std::size_t>{0, 1, 2});
  CHECK(r.mean_abs_phi == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("ranking is invariant under permutation of the explanations") {
  std::vector<ShapExplanation> rows(3);
  rows[0].phi = {1.0, -5.0, 2.0};
  rows[1].phi = {4.0, 0.5, -2.0};
  rows[2].phi = {-3.0, 1.5, 0.0};
  const FeatureRanking a = rank_by_mean_abs(rows, 3);
  std::swap(rows[0], rows[2]);
  std::swap(rows[1], rows[2]);
  const FeatureRanking b = rank_by_mean_abs(rows, 3);
  CHECK(a.order == b.order);
  CHECK(a.mean_abs_phi == b.mean_abs_phi);
}
