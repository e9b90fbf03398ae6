#include "flowshap/rf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowshap/errors.hpp"
#include "flowshap/prng.hpp"

namespace flowshap {

void RfConfig::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be at least 1");
  if (max_depth < 0) throw ConfigError("max_depth must be non-negative");
  if (max_features < 0) throw ConfigError("max_features must be non-negative");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
}

int RfConfig::effective_max_depth() const {
  if (max_depth == 0 || max_depth > 64) return 64;
  return max_depth;
}

std::size_t RfConfig::effective_max_features(std::size_t n_features) const {
  std::size_t m;
  if (max_features == 0) {
    m = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(n_features))));
  } else {
    m = static_cast<std::size_t>(max_features);
  }
  if (m < 1) m = 1;
  return std::min(m, n_features);
}

double gini_impurity(std::size_t neg, std::size_t pos) {
  const std::size_t n = neg + pos;
  if (n == 0) return 0.0;
  const double p0 = static_cast<double>(neg) / static_cast<double>(n);
  const double p1 = static_cast<double>(pos) / static_cast<double>(n);
  return 1.0 - p0 * p0 - p1 * p1;
}

double gini_decrease(std::size_t neg_l, std::size_t pos_l, std::size_t neg_r,
                     std::size_t pos_r) {
  const std::size_t nl = neg_l + pos_l;
  const std::size_t nr = neg_r + pos_r;
  const std::size_t n = nl + nr;
  const double fl = static_cast<double>(nl) / static_cast<double>(n);
  const double fr = static_cast<double>(nr) / static_cast<double>(n);
  return gini_impurity(neg_l + neg_r, pos_l + pos_r) -
         fl * gini_impurity(neg_l, pos_l) - fr * gini_impurity(neg_r, pos_r);
}

std::vector<std::uint32_t> bootstrap_sample(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::uint32_t> sample(n);
  for (std::size_t i = 0; i < n; ++i) {
    sample[i] = static_cast<std::uint32_t>(rng.next_below(n));
  }
  return sample;
}

namespace {

struct RfBuilder {
  const Dataset& ds;
  const RfConfig& cfg;
  SplitMix64& rng;
  std::size_t m_features;
  int depth_cap;
  DecisionTree tree;
  std::vector<std::size_t> feature_pool;

  // Draws m distinct features, returned in ascending order.
  std::vector<std::size_t> draw_features() {
    const std::size_t d = ds.n_features();
    for (std::size_t i = 0; i < d; ++i) feature_pool[i] = i;
    for (std::size_t i = 0; i < m_features; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next_below(d - i));
      std::swap(feature_pool[i], feature_pool[j]);
    }
    std::vector<std::size_t> chosen(feature_pool.begin(),
                                    feature_pool.begin() + static_cast<long>(m_features));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  int build(std::vector<std::uint32_t>& sample, int depth) {
    const std::size_t n = sample.size();
    std::size_t pos = 0;
    for (std::uint32_t r : sample) pos += ds.label(r);
    const std::size_t neg = n - pos;

    const int node_index = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.value = pos > neg ? 1.0 : 0.0;
    node.cover = static_cast<double>(n);
    tree.nodes.push_back(node);
    if (depth > tree.max_depth_reached) tree.max_depth_reached = depth;

    const std::size_t min_leaf = static_cast<std::size_t>(cfg.min_samples_leaf);
    if (depth >= depth_cap || pos == 0 || neg == 0 || n < 2 * min_leaf) {
      return node_index;
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_decrease = 0.0;
    std::vector<std::uint32_t> order(sample);

    for (std::size_t j : draw_features()) {
      std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return ds.at(a, j) < ds.at(b, j);
      });
      std::size_t pos_l = 0, neg_l = 0;
      for (std::size_t i = 1; i < n; ++i) {
        const std::uint32_t prev_row = order[i - 1];
        if (ds.label(prev_row) == 1) ++pos_l;
        else ++neg_l;
        const double prev = ds.at(prev_row, j);
        const double cur = ds.at(order[i], j);
        if (!(cur > prev)) continue;
        if (i < min_leaf || n - i < min_leaf) continue;
        const double t = prev + (cur - prev) / 2.0;
        if (!(t > prev)) continue;
        const double dec = gini_decrease(neg_l, pos_l, neg - neg_l, pos - pos_l);
        if (dec > best_decrease) {
          best_feature = static_cast<int>(j);
          best_threshold = t;
          best_decrease = dec;
        }
      }
    }

    if (best_feature < 0) return node_index;

    std::vector<std::uint32_t> left_rows, right_rows;
    left_rows.reserve(n);
    right_rows.reserve(n);
    for (std::uint32_t r : sample) {
      if (ds.at(r, static_cast<std::size_t>(best_feature)) < best_threshold) {
        left_rows.push_back(r);
      } else {
        right_rows.push_back(r);
      }
    }
    sample.clear();
    sample.shrink_to_fit();

    const int left_index = build(left_rows, depth + 1);
    const int right_index = build(right_rows, depth + 1);
    TreeNode& parent = tree.nodes[static_cast<std::size_t>(node_index)];
    parent.feature = best_feature;
    parent.threshold = best_threshold;
    parent.left = left_index;
    parent.right = right_index;
    parent.value = 0.0;
    return node_index;
  }
};

}  // namespace

DecisionTree train_rf_tree(const Dataset& ds, const std::vector<std::uint32_t>& sample,
                           const RfConfig& cfg, std::uint64_t tree_seed) {
  cfg.validate();
  if (sample.empty()) throw DataError("empty training sample");
  SplitMix64 rng(tree_seed);
  RfBuilder builder{ds,
                    cfg,
                    rng,
                    cfg.effective_max_features(ds.n_features()),
                    cfg.effective_max_depth(),
                    {},
                    std::vector<std::size_t>(ds.n_features())};
  std::vector<std::uint32_t> rows(sample);
  builder.build(rows, 0);
  return std::move(builder.tree);
}

Ensemble train_rf(const Dataset& ds, const RfConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!ds.labeled()) throw DataError("forest training requires labeled data");
  const std::size_t n = ds.n_rows();
  if (n < 2) throw DataError("need at least 2 records to train");
  const std::size_t pos = ds.positive_count();
  if (pos == 0 || pos == n) throw DataError("single-class training data");

  Ensemble ens;
  ens.kind = EnsembleKind::kRandomForest;
  ens.n_features = ds.n_features();
  ens.base_value = 0.0;
  ens.trees.reserve(static_cast<std::size_t>(cfg.n_trees));

  const std::uint64_t stream = mix_seed(seed, component_tag("rf"));
  for (int t = 0; t < cfg.n_trees; ++t) {
    const std::uint64_t tree_seed = mix_seed(stream, static_cast<std::uint64_t>(t));
    auto sample = bootstrap_sample(n, tree_seed);
    ens.trees.push_back(train_rf_tree(ds, sample, cfg, mix_seed(tree_seed, 1)));
  }
  return ens;
}

std::pair<int, double> predict_rf(const Ensemble& ens, std::span<const double> x) {
  if (ens.kind != EnsembleKind::kRandomForest) {
    throw ContractError("vote prediction is a random forest output");
  }
  const double fraction = predict_ensemble_margin(ens, x);
  return {fraction > 0.5 ? 1 : 0, fraction};
}

}  // namespace flowshap
