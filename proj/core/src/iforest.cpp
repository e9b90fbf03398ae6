#include "flowshap/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowshap/errors.hpp"
#include "flowshap/prng.hpp"

namespace flowshap {

namespace {
constexpr double kEulerMascheroni = 0.5772156649;
}

void IforestConfig::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be at least 1");
  if (psi < 2) throw ConfigError("psi must be at least 2");
  if (!(score_threshold > 0.0 && score_threshold < 1.0)) {
    throw ConfigError("score_threshold must be in (0,1)");
  }
}

double expected_path_correction(std::size_t m) {
  if (m < 2) return 0.0;
  const double md = static_cast<double>(m);
  return 2.0 * (std::log(md - 1.0) + kEulerMascheroni) - 2.0 * (md - 1.0) / md;
}

namespace {

struct IsoBuilder {
  const Dataset& ds;
  SplitMix64& rng;
  int depth_cap;
  DecisionTree tree;

  int build(std::vector<std::uint32_t>& rows, int depth) {
    const int node_index = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.cover = static_cast<double>(rows.size());
    node.value = static_cast<double>(depth) + expected_path_correction(rows.size());
    tree.nodes.push_back(node);
    if (depth > tree.max_depth_reached) tree.max_depth_reached = depth;

    if (depth >= depth_cap || rows.size() < 2) return node_index;

    const std::size_t d = ds.n_features();
    std::vector<std::size_t> candidates;
    std::vector<double> lo(d), hi(d);
    for (std::size_t j = 0; j < d; ++j) {
      double mn = ds.at(rows[0], j), mx = mn;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const double v = ds.at(rows[i], j);
        if (v < mn) mn = v;
        if (v > mx) mx = v;
      }
      lo[j] = mn;
      hi[j] = mx;
      if (mx > mn) candidates.push_back(j);
    }
    if (candidates.empty()) return node_index;

    const std::size_t j = candidates[rng.next_below(candidates.size())];
    double t;
    do {
      t = lo[j] + rng.next_unit() * (hi[j] - lo[j]);
    } while (!(t > lo[j] && t < hi[j]));

    std::vector<std::uint32_t> left_rows, right_rows;
    for (std::uint32_t r : rows) {
      if (ds.at(r, j) < t) left_rows.push_back(r);
      else right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int left_index = build(left_rows, depth + 1);
    const int right_index = build(right_rows, depth + 1);
    TreeNode& parent = tree.nodes[static_cast<std::size_t>(node_index)];
    parent.feature = static_cast<int>(j);
    parent.threshold = t;
    parent.left = left_index;
    parent.right = right_index;
    parent.value = 0.0;
    return node_index;
  }
};

}  // namespace

IforestTrainResult train_iforest(const Dataset& ds, const IforestConfig& cfg,
                                 std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = ds.n_rows();
  if (n < 2) throw DataError("need at least 2 records to train");

  IforestTrainResult result;
  result.psi_effective = std::min<std::size_t>(static_cast<std::size_t>(cfg.psi), n);
  result.max_depth = static_cast<int>(
      std::ceil(std::log2(static_cast<double>(result.psi_effective))));
  result.ensemble.kind = EnsembleKind::kIsolationForest;
  result.ensemble.n_features = ds.n_features();
  result.ensemble.base_value = static_cast<double>(result.psi_effective);
  result.ensemble.trees.reserve(static_cast<std::size_t>(cfg.n_trees));

  const std::uint64_t stream = mix_seed(seed, component_tag("iforest"));
  std::vector<std::uint32_t> pool(n);
  for (int t = 0; t < cfg.n_trees; ++t) {
    SplitMix64 rng(mix_seed(stream, static_cast<std::uint64_t>(t)));
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::size_t i = 0; i < result.psi_effective; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::uint32_t> rows(pool.begin(),
                                    pool.begin() + static_cast<long>(result.psi_effective));
    IsoBuilder builder{ds, rng, result.max_depth, {}};
    builder.build(rows, 0);
    result.ensemble.trees.push_back(std::move(builder.tree));
  }
  return result;
}

double expected_path_length(const Ensemble& ens, std::span<const double> x) {
  if (ens.kind != EnsembleKind::kIsolationForest) {
    throw ContractError("path length is an isolation forest output");
  }
  return ensemble_tree_mean(ens, x);
}

double anomaly_score_from_path(double expected_path, std::size_t psi_effective) {
  const double c = expected_path_correction(psi_effective);
  if (c <= 0.0) throw ContractError("anomaly score needs psi >= 2");
  return std::exp2(-expected_path / c);
}

double anomaly_score(const Ensemble& ens, std::span<const double> x) {
  if (ens.kind != EnsembleKind::kIsolationForest) {
    throw ContractError("anomaly score is an isolation forest output");
  }
  return anomaly_score_from_path(ensemble_tree_mean(ens, x),
                                 static_cast<std::size_t>(ens.base_value));
}

}  // namespace flowshap
