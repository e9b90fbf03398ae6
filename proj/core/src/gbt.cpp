#include "flowshap/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flowshap/errors.hpp"

namespace flowshap {

void GbtConfig::validate() const {
  if (n_rounds < 1) throw ConfigError("n_rounds must be at least 1");
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta must be in (0,1]");
  if (max_depth < 1) throw ConfigError("max_depth must be at least 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  if (!(min_child_weight >= 0.0)) throw ConfigError("min_child_weight must be non-negative");
  if (!(base_score > 0.0 && base_score < 1.0)) throw ConfigError("base_score must be in (0,1)");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double gbt_leaf_weight(double grad_sum, double hess_sum, double lambda, double alpha) {
  return -soft_threshold(grad_sum, alpha) / (hess_sum + lambda);
}

double gbt_split_gain(double gl, double hl, double gr, double hr, double lambda,
                      double gamma) {
  const double left = gl * gl / (hl + lambda);
  const double right = gr * gr / (hr + lambda);
  const double g = gl + gr;
  const double whole = g * g / (hl + hr + lambda);
  return 0.5 * (left + right - whole) - gamma;
}

double logistic_loss(double margin, int label) {
  const double y = static_cast<double>(label);
  if (margin > 0.0) return std::log1p(std::exp(-margin)) + (1.0 - y) * margin;
  return std::log1p(std::exp(margin)) - y * margin;
}

namespace {

struct NodeBuild {
  int node_index;
  double grad;
  double hess;
};

struct SlotScan {
  double prev = 0.0;
  double grad_left = 0.0;
  double hess_left = 0.0;
  std::size_t n_left = 0;
};

struct SlotBest {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

double mean_loss(const std::vector<double>& margins, const Dataset& ds) {
  double total = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    total += logistic_loss(margins[i], ds.label(i));
  }
  return total / static_cast<double>(margins.size());
}

}  // namespace

GbtTrainResult train_gbt(const Dataset& ds, const GbtConfig& cfg) {
  cfg.validate();
  if (!ds.labeled()) throw DataError("boosting requires labeled data");
  const std::size_t n = ds.n_rows();
  const std::size_t d = ds.n_features();
  if (n < 2) throw DataError("need at least 2 records to train");
  const std::size_t pos = ds.positive_count();
  if (pos == 0 || pos == n) throw DataError("single-class training data");

  std::vector<std::vector<std::uint32_t>> sorted_rows(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto& order = sorted_rows[j];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return ds.at(a, j) < ds.at(b, j);
    });
  }

  GbtTrainResult result;
  result.ensemble.kind = EnsembleKind::kGbt;
  result.ensemble.n_features = d;
  result.ensemble.base_value = logit(cfg.base_score);
  result.ensemble.trees.reserve(static_cast<std::size_t>(cfg.n_rounds));

  std::vector<double> margins(n, result.ensemble.base_value);
  result.losses.reserve(static_cast<std::size_t>(cfg.n_rounds) + 1);
  result.losses.push_back(mean_loss(margins, ds));

  std::vector<double> grad(n), hess(n);
  std::vector<int> row_slot(n);
  std::vector<double> margin_add(n);

  for (int round = 0; round < cfg.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margins[i]);
      grad[i] = p - static_cast<double>(ds.label(i));
      hess[i] = p * (1.0 - p);
    }

    DecisionTree tree;
    double root_grad = 0.0, root_hess = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      root_grad += grad[i];
      root_hess += hess[i];
    }
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0.0, root_hess});
    std::fill(row_slot.begin(), row_slot.end(), 0);
    std::fill(margin_add.begin(), margin_add.end(), 0.0);
    std::vector<NodeBuild> level{{0, root_grad, root_hess}};
    int depth = 0;

    while (!level.empty()) {
      std::vector<SlotBest> bests(level.size());
      if (depth < cfg.max_depth) {
        std::vector<SlotScan> scans(level.size());
        for (std::size_t j = 0; j < d; ++j) {
          std::fill(scans.begin(), scans.end(), SlotScan{});
          for (std::uint32_t r : sorted_rows[j]) {
            const int s = row_slot[r];
            if (s < 0) continue;
            SlotScan& scan = scans[static_cast<std::size_t>(s)];
            const double v = ds.at(r, j);
            if (scan.n_left > 0 && v > scan.prev) {
              const double t = scan.prev + (v - scan.prev) / 2.0;
              if (t > scan.prev) {
                const NodeBuild& nb = level[static_cast<std::size_t>(s)];
                const double hr = nb.hess - scan.hess_left;
                if (scan.hess_left >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
                  const double gain =
                      gbt_split_gain(scan.grad_left, scan.hess_left, nb.grad - scan.grad_left,
                                     hr, cfg.lambda, cfg.gamma);
                  SlotBest& best = bests[static_cast<std::size_t>(s)];
                  if (gain > 0.0 && gain > best.gain) {
                    best.feature = static_cast<int>(j);
                    best.threshold = t;
                    best.gain = gain;
                  }
                }
              }
            }
            scan.grad_left += grad[r];
            scan.hess_left += hess[r];
            scan.prev = v;
            ++scan.n_left;
          }
        }
      }

      std::vector<NodeBuild> next;
      std::vector<int> slot_to_left(level.size(), -1);
      for (std::size_t s = 0; s < level.size(); ++s) {
        const NodeBuild& nb = level[s];
        TreeNode& node = tree.nodes[static_cast<std::size_t>(nb.node_index)];
        if (bests[s].feature < 0) {
          node.value = cfg.eta * gbt_leaf_weight(nb.grad, nb.hess, cfg.lambda, cfg.alpha);
          continue;
        }
        node.feature = bests[s].feature;
        node.threshold = bests[s].threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        slot_to_left[s] = static_cast<int>(next.size());
        tree.nodes.push_back(TreeNode{});
        tree.nodes.push_back(TreeNode{});
        next.push_back(NodeBuild{node.left, 0.0, 0.0});
        next.push_back(NodeBuild{node.right, 0.0, 0.0});
      }

      for (std::size_t r = 0; r < n; ++r) {
        const int s = row_slot[r];
        if (s < 0) continue;
        const NodeBuild& nb = level[static_cast<std::size_t>(s)];
        if (slot_to_left[static_cast<std::size_t>(s)] < 0) {
          margin_add[r] = tree.nodes[static_cast<std::size_t>(nb.node_index)].value;
          row_slot[r] = -1;
          continue;
        }
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(nb.node_index)];
        const bool left = ds.at(r, static_cast<std::size_t>(node.feature)) < node.threshold;
        const int child_slot = slot_to_left[static_cast<std::size_t>(s)] + (left ? 0 : 1);
        row_slot[r] = child_slot;
        next[static_cast<std::size_t>(child_slot)].grad += grad[r];
        next[static_cast<std::size_t>(child_slot)].hess += hess[r];
      }
      for (const NodeBuild& nb : next) {
        tree.nodes[static_cast<std::size_t>(nb.node_index)].cover = nb.hess;
      }
      if (!next.empty()) {
        ++depth;
        tree.max_depth_reached = depth;
      }
      level = std::move(next);
    }

    for (std::size_t i = 0; i < n; ++i) margins[i] += margin_add[i];
    result.ensemble.trees.push_back(std::move(tree));
    result.losses.push_back(mean_loss(margins, ds));
  }

  return result;
}

double predict_gbt_proba(const Ensemble& ens, std::span<const double> x) {
  if (ens.kind != EnsembleKind::kGbt) throw ContractError("probability is a gbt output");
  return sigmoid(predict_ensemble_margin(ens, x));
}

}  // namespace flowshap
