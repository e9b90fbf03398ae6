// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Optional: --ids2018 <csv> runs the real-data check on a prepared sample
// (numeric feature columns plus a "label" column with positive label "1").

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "flowshap/bundle.hpp"
#include "flowshap/dataset.hpp"
#include "flowshap/errors.hpp"
#include "flowshap/metrics.hpp"
#include "flowshap/pipeline.hpp"
#include "flowshap/prng.hpp"
#include "flowshap/reports.hpp"
#include "flowshap/runconfig.hpp"
#include "flowshap/shap.hpp"
#include "flowshap/synthetic.hpp"
#include "flowshap/tree.hpp"

#include "helpers.hpp"

using namespace flowshap;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;
int g_passes = 0;
int g_skips = 0;

void report(int id, const char* name, const Outcome& o, double seconds,
            double budget_seconds) {
  const bool in_budget = budget_seconds <= 0.0 || seconds <= budget_seconds;
  const bool pass = o.pass && in_budget;
  if (pass) {
    ++g_passes;
  } else {
    ++g_failures;
  }
  std::printf("[%2d] %s  %-34s (%s; %.1fs%s)\n", id, pass ? "PASS" : "FAIL", name,
              o.detail.c_str(), seconds, in_budget ? "" : " OVER BUDGET");
  std::fflush(stdout);
}

void run(int id, const char* name, double budget_seconds,
         const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, name, o, seconds, budget_seconds);
}

void skip(int id, const char* name, const std::string& why) {
  ++g_skips;
  std::printf("[%2d] SKIP  %-34s (%s)\n", id, name, why.c_str());
}

Dataset planted(std::size_t n, std::size_t d, double contamination, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_rows = n;
  cfg.n_features = d;
  cfg.contamination = contamination;
  return generate_synthetic(cfg, seed);
}

std::string fmt_err(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

bool losses_non_increasing(const std::vector<double>& losses) {
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i] > losses[i - 1] + 1e-12) return false;
  }
  return true;
}

Outcome check_local_accuracy() {
  const Dataset train = planted(2000, 8, 0.05, 404);
  std::vector<TrainedModel> models;
  for (EnsembleKind kind : {EnsembleKind::kGbt, EnsembleKind::kRandomForest,
                            EnsembleKind::kIsolationForest}) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.gbt.n_rounds = 60;
    cfg.rf.n_trees = 60;
    cfg.iforest.n_trees = 100;
    models.push_back(train_model(train, cfg, 404));
  }
  SplitMix64 rng(405);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(8);
    for (double& v : x) v = rng.next_unit() * 16.0;
    for (const TrainedModel& m : models) {
      const ShapExplanation e = explain_instance(m, x);
      const double sum = std::accumulate(e.phi.begin(), e.phi.end(), e.base_value);
      worst = std::max(worst, std::abs(sum - e.model_output));
    }
  }
  return {worst <= 1e-6,
          "1000 instances x 3 kinds, max |base+sum(phi)-output| = " + fmt_err(worst)};
}

Outcome check_oracle_conformance() {
  double worst = 0.0;
  int trials = 0;
  SplitMix64 point_rng(71);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const std::size_t d = 2 + t % 5;
    const Ensemble ens = testing::random_ensemble(9000 + t, d, 10, 4);
    const std::vector<double> x = testing::random_point(point_rng, d);
    const ShapExplanation fast = tree_shap(ens, x);
    const std::vector<double> slow = brute_force_shapley(ens, x);
    for (std::size_t j = 0; j < d; ++j) {
      worst = std::max(worst, std::abs(fast.phi[j] - slow[j]));
    }
    ++trials;
  }
  return {worst <= 1e-9,
          std::to_string(trials) + " ensembles, max |fast-brute| = " + fmt_err(worst)};
}

Outcome check_dummy_and_symmetry() {
  // Ensemble that never touches features 1..3: their phi must be exactly 0.
  Ensemble ens;
  ens.kind = EnsembleKind::kGbt;
  ens.n_features = 4;
  ens.trees.push_back(testing::stump(0, 0.5, -1.0, 1.0, 30.0, 70.0));
  ens.trees.push_back(testing::stump(0, 0.2, 0.5, -0.5, 10.0, 90.0));
  SplitMix64 rng(5);
  bool dummy_zero = true;
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x = testing::random_point(rng, 4);
    const ShapExplanation e = tree_shap(ens, x);
    for (std::size_t j = 1; j < 4; ++j) dummy_zero = dummy_zero && e.phi[j] == 0.0;
  }

  // Mirrored tree: f0 at the root, f1 in both children, equal covers, and a
  // value table symmetric in the two features; phi0 must equal phi1.
  DecisionTree tree;
  tree.nodes = {
      TreeNode{0, 0.5, 1, 2, 0.0, 100.0},  TreeNode{1, 0.5, 3, 4, 0.0, 50.0},
      TreeNode{1, 0.5, 5, 6, 0.0, 50.0},   TreeNode{-1, 0.0, -1, -1, 0.0, 25.0},
      TreeNode{-1, 0.0, -1, -1, 1.0, 25.0}, TreeNode{-1, 0.0, -1, -1, 1.0, 25.0},
      TreeNode{-1, 0.0, -1, -1, 4.0, 25.0},
  };
  tree.max_depth_reached = 2;
  Ensemble sym;
  sym.kind = EnsembleKind::kGbt;
  sym.n_features = 2;
  sym.trees.push_back(tree);
  double worst = 0.0;
  for (double v : {0.7, 0.2, 0.5, 0.999}) {
    const ShapExplanation e = tree_shap(sym, std::vector<double>{v, v});
    worst = std::max(worst, std::abs(e.phi[0] - e.phi[1]));
  }
  return {dummy_zero && worst <= 1e-12,
          std::string("unused phi ") + (dummy_zero ? "all 0.0" : "NONZERO") +
              ", max symmetric gap = " + fmt_err(worst)};
}

Outcome check_metric_fidelity() {
  SplitMix64 rng(88);
  double worst = 0.0;
  bool order_ok = true;
  for (int t = 0; t < 2000; ++t) {
    const ConfusionCounts c{rng.next_below(100), rng.next_below(100),
                            rng.next_below(100), rng.next_below(100)};
    if (c.total() == 0) continue;
    const MetricsReport r = compute_metrics(c);
    const double total = static_cast<double>(c.total());
    worst = std::max(worst, std::abs(*r.accuracy.value -
                                     static_cast<double>(c.tp + c.tn) / total));
    if (c.tp + c.fp > 0) {
      const double p = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
      worst = std::max(worst, std::abs(*r.precision.value - p));
    } else if (r.precision.defined()) {
      order_ok = false;  // undefined must be surfaced, not reported as a number
    }
    if (c.tp + c.fn > 0) {
      const double q = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
      worst = std::max(worst, std::abs(*r.recall.value - q));
    } else if (r.recall.defined()) {
      order_ok = false;
    }
    if (r.precision.defined() && r.recall.defined() && r.f1.defined()) {
      const double p = *r.precision.value, q = *r.recall.value;
      worst = std::max(worst,
                       std::abs(*r.f1.value - (p + q > 0 ? 2 * p * q / (p + q) : 0)));
      order_ok = order_ok && *r.f1.value <= std::max(p, q) + 1e-12 &&
                 *r.f1.value >= std::min(p, q) - 1e-12;
    }
  }
  const double f1 = f1_score(0.909, 0.882);
  const bool harmonic = std::abs(f1 - 0.8952964824120604) <= 1e-12 &&
                        std::abs(f1 - 0.93) > 0.03;
  return {worst <= 1e-12 && order_ok && harmonic,
          "2000 draws, max formula gap = " + fmt_err(worst) +
              ", F1(0.909,0.882) = " + std::to_string(f1).substr(0, 6)};
}

Outcome check_detection_quality() {
  const Dataset ds = planted(5000, 10, 0.05, 2024);
  const auto [train, test] = split_train_test(ds, 0.8, 2024, true);

  const auto timed_eval = [&](EnsembleKind kind, double* seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    ModelConfig cfg;  // library defaults for each kind
    cfg.kind = kind;
    const TrainedModel model = train_model(train, cfg, 2024);
    const MetricsReport r = compute_metrics(evaluate_model(model, test, 0.5));
    *seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  double gbt_s = 0.0, rf_s = 0.0;
  const MetricsReport g = timed_eval(EnsembleKind::kGbt, &gbt_s);
  const MetricsReport r = timed_eval(EnsembleKind::kRandomForest, &rf_s);

  const bool pass = g.accuracy.defined() && *g.accuracy.value >= 0.99 &&
                    g.f1.defined() && *g.f1.value >= 0.90 &&
                    r.accuracy.defined() && *r.accuracy.value >= 0.95 &&
                    gbt_s <= 30.0 && rf_s <= 30.0;
  char buf[128];
  std::snprintf(buf, sizeof buf, "gbt acc %.4f f1 %.4f in %.1fs, rf acc %.4f in %.1fs",
                g.accuracy.defined() ? *g.accuracy.value : -1,
                g.f1.defined() ? *g.f1.value : -1, gbt_s,
                r.accuracy.defined() ? *r.accuracy.value : -1, rf_s);
  return {pass, buf};
}

Outcome check_isolation_separation() {
  int separated = 0;
  double precision_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Dataset ds = planted(1000, 6, 0.05, 3000 + seed);
    ModelConfig cfg;
    cfg.kind = EnsembleKind::kIsolationForest;
    const TrainedModel model = train_model(ds, cfg, 3000 + seed);

    std::vector<double> scores(ds.n_rows());
    double mean_anom = 0.0, mean_inlier = 0.0;
    std::size_t n_anom = 0;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
      scores[i] = model_score(model, ds.row(i));
      if (ds.label(i) == 1) {
        mean_anom += scores[i];
        ++n_anom;
      } else {
        mean_inlier += scores[i];
      }
    }
    mean_anom /= static_cast<double>(n_anom);
    mean_inlier /= static_cast<double>(ds.n_rows() - n_anom);
    if (mean_anom > mean_inlier) ++separated;

    std::vector<std::size_t> order(ds.n_rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] > scores[b];
    });
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_anom; ++i) hits += ds.label(order[i]) == 1 ? 1 : 0;
    precision_sum += static_cast<double>(hits) / static_cast<double>(n_anom);
  }
  const double mean_precision = precision_sum / 20.0;
  char buf[96];
  std::snprintf(buf, sizeof buf, "separation %d/20 seeds, mean precision@k %.3f",
                separated, mean_precision);
  return {separated == 20 && mean_precision >= 0.9, buf};
}

Outcome check_loss_monotonic() {
  int fixtures = 0;
  int rounds = 0;
  bool ok = true;
  struct Fixture {
    std::size_t n, d;
    double contamination;
    std::uint64_t seed;
    int n_rounds;
  };
  const Fixture fixture_table[] = {{60, 2, 0.1, 1, 40},   {200, 4, 0.05, 2, 60},
                                   {500, 6, 0.2, 3, 80},  {1000, 3, 0.02, 4, 50},
                                   {2000, 10, 0.05, 5, 100}};
  for (const Fixture& f : fixture_table) {
    const Dataset ds = planted(f.n, f.d, f.contamination, f.seed);
    ModelConfig cfg;
    cfg.gbt.n_rounds = f.n_rounds;
    const TrainedModel model = train_model(ds, cfg, f.seed);
    ok = ok && losses_non_increasing(model.gbt_losses) &&
         model.gbt_losses.size() == static_cast<std::size_t>(f.n_rounds) + 1;
    ++fixtures;
    rounds += f.n_rounds;
  }
  return {ok, std::to_string(fixtures) + " fixtures, " + std::to_string(rounds) +
                  " rounds, every step non-increasing"};
}

Outcome check_cv_agreement() {
  const Dataset ds = planted(5000, 10, 0.05, 606);
  ModelConfig cfg;
  cfg.gbt.n_rounds = 50;
  cfg.gbt.max_depth = 4;

  const std::vector<int> folds = assign_folds(ds, 10, 606, true);
  std::vector<std::size_t> sizes(10, 0);
  for (int f : folds) {
    if (f < 0 || f >= 10) return {false, "fold id out of range"};
    sizes[static_cast<std::size_t>(f)]++;
  }
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  if (total != ds.n_rows() || *hi - *lo > 1) {
    return {false, "fold partition broken"};
  }

  const auto [train, test] = split_train_test(ds, 0.8, 606, true);
  const TrainedModel model = train_model(train, cfg, 606);
  const double holdout = *compute_metrics(evaluate_model(model, test, 0.5)).accuracy.value;

  const CvResult cv = kfold_cv(ds, cfg, 10, 606, true);
  const double cv_mean = *cv.summary.accuracy.mean.value;
  char buf[96];
  std::snprintf(buf, sizeof buf, "holdout %.4f vs 10-fold mean %.4f", holdout, cv_mean);
  return {std::abs(holdout - cv_mean) <= 0.02, buf};
}

Outcome check_determinism() {
  const Dataset ds = planted(800, 6, 0.05, 505);
  RunConfig rc = parse_run_config(
      R"({"schema":{"features":["f0","f1","f2","f3","f4","f5"]},)"
      R"("model":{"kind":"gbt","n_rounds":30},"seed":505})",
      "acceptance");

  const auto make_bundle = [&] {
    const TrainedModel m = train_model(ds, rc.model, 505);
    ModelBundle b;
    b.ensemble = m.ensemble;
    b.normalizer = m.normalizer;
    b.schema = m.schema;
    b.config_json = canonical_config_json(rc);
    b.seed = 505;
    return b;
  };
  const ModelBundle b1 = make_bundle();
  const ModelBundle b2 = make_bundle();
  const std::string text1 = bundle_to_json(b1);
  if (text1 != bundle_to_json(b2)) return {false, "bundle bytes differ across reruns"};

  const TrainedModel m1{b1.ensemble, b1.normalizer, b1.schema, {}};
  FoldResult fold;
  fold.report = compute_metrics(evaluate_model(m1, ds, 0.5));
  const ReportMeta meta{hash_hex(config_hash(rc)), 505};
  const std::string rep1 = metrics_report_json(
      "holdout", rc.model.kind, 0.5, {fold}, summarize_folds({fold}), meta);
  const std::string rep2 = metrics_report_json(
      "holdout", rc.model.kind, 0.5, {fold}, summarize_folds({fold}), meta);
  if (rep1 != rep2) return {false, "metrics report bytes differ"};

  const ModelBundle back = parse_bundle(text1, "mem");
  const TrainedModel m2{back.ensemble, back.normalizer, back.schema, {}};
  SplitMix64 rng(506);
  int exact = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> x = testing::random_point(rng, 6);
    if (model_score(m1, x) == model_score(m2, x)) ++exact;
  }
  return {exact == 1000,
          "bundle + report bytes stable, " + std::to_string(exact) +
              "/1000 reloaded predictions bit-exact"};
}

Outcome check_ranking_sanity() {
  int top = 0;
  for (std::uint64_t run = 0; run < 100; ++run) {
    const Dataset ds = planted(400, 6, 0.1, 7000 + run);
    ModelConfig cfg;
    cfg.gbt.n_rounds = 25;
    cfg.gbt.max_depth = 3;
    const TrainedModel model = train_model(ds, cfg, 7000 + run);
    std::vector<ShapExplanation> exps;
    exps.reserve(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
      exps.push_back(explain_instance(model, ds.row(i)));
    }
    const FeatureRanking ranking = rank_by_mean_abs(exps, ds.n_features());
    if (!ranking.order.empty() && ranking.order[0] == 0) ++top;
  }
  return {top >= 95, "signal feature ranked #1 in " + std::to_string(top) + "/100 runs"};
}

Outcome check_ids2018(const std::string& path) {
  FeatureSchema schema;
  {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return {false, "cannot open " + path};
    std::string text;
    char buf[65536];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
    std::fclose(f);
    const auto records = parse_csv_records(text);
    if (records.empty()) return {false, "empty csv"};
    for (const std::string& col : records[0]) {
      if (col != "label") schema.feature_names.push_back(col);
    }
    schema.label_column = "label";
    schema.positive_label = "1";
  }
  const Dataset ds = load_csv(path, schema, MissingPolicy::kDrop);
  const auto [train, test] = split_train_test(ds, 0.8, 2018, true);
  ModelConfig cfg;
  const TrainedModel model = train_model(train, cfg, 2018);
  const MetricsReport r = compute_metrics(evaluate_model(model, test, 0.5));
  char buf[64];
  std::snprintf(buf, sizeof buf, "accuracy %.4f on %zu flows",
                r.accuracy.defined() ? *r.accuracy.value : -1.0, ds.n_rows());
  return {r.accuracy.defined() && *r.accuracy.value >= 0.97, buf};
}

}  // namespace

int main(int argc, char** argv) {
  std::string ids2018_path;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--ids2018") == 0 && i + 1 < argc) {
      ids2018_path = argv[i + 1];
      ++i;
    }
  }

  run(1, "attribution local accuracy", 60, check_local_accuracy);
  run(2, "attribution oracle conformance", 120, check_oracle_conformance);
  run(3, "attribution dummy and symmetry", 0, check_dummy_and_symmetry);
  run(4, "metric formula fidelity", 0, check_metric_fidelity);
  run(5, "detection quality on planted data", 60, check_detection_quality);
  run(6, "isolation score separation", 60, check_isolation_separation);
  run(7, "boosting loss monotonicity", 0, check_loss_monotonic);
  run(8, "cross-validation agreement", 0, check_cv_agreement);
  run(9, "determinism and persistence", 0, check_determinism);
  run(10, "signal feature ranking", 0, check_ranking_sanity);
  if (ids2018_path.empty()) {
    skip(11, "real-data accuracy (optional)", "pass --ids2018 <csv> to enable");
  } else {
    run(11, "real-data accuracy (optional)", 0,
        [&] { return check_ids2018(ids2018_path); });
  }

  std::printf("ACCEPTANCE: %d passed, %d failed, %d skipped\n", g_passes, g_failures,
              g_skips);
  return g_failures == 0 ? 0 : 1;
}
