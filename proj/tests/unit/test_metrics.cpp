#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "flowshap/errors.hpp"
#include "flowshap/metrics.hpp"
#include "flowshap/pipeline.hpp"
#include "flowshap/prng.hpp"
#include "flowshap/synthetic.hpp"

#include "helpers.hpp"

using namespace flowshap;
using testing::make_dataset;

namespace {

Dataset planted(std::size_t n, std::size_t d, double contamination, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_rows = n;
  cfg.n_features = d;
  cfg.contamination = contamination;
  return generate_synthetic(cfg, seed);
}

}  // namespace

TEST_CASE("confusion counts map to the four metrics") {
  const MetricsReport r = compute_metrics(ConfusionCounts{90, 10, 10, 890});
  CHECK(*r.precision.value == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(*r.recall.value == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(*r.accuracy.value == doctest::Approx(0.98).epsilon(1e-15));
  CHECK(*r.f1.value == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("all-negative predictions leave precision undefined but recall zero") {
  const std::vector<int> y_true{1, 0, 1, 0};
  const std::vector<int> y_pred{0, 0, 0, 0};
  const MetricsReport r = compute_metrics(y_true, y_pred);
  CHECK_FALSE(r.precision.defined());
  CHECK(r.precision.reason == "no positive predictions");
  REQUIRE(r.recall.defined());
  CHECK(*r.recall.value == 0.0);
  CHECK_FALSE(r.f1.defined());
}

TEST_CASE("the harmonic mean of 0.909 and 0.882 is 0.8953, not 0.93") {
  const double f1 = f1_score(0.909, 0.882);
  CHECK(f1 == doctest::Approx(0.8952964824120604).epsilon(1e-15));
  CHECK(std::abs(f1 - 0.93) > 0.03);
}

TEST_CASE("perfect predictions give accuracy one and defined unit P/R") {
  const std::vector<int> y{1, 0, 0, 1, 1};
  const MetricsReport r = compute_metrics(y, y);
  CHECK(*r.accuracy.value == 1.0);
  CHECK(*r.precision.value == 1.0);
  CHECK(*r.recall.value == 1.0);
  CHECK(*r.f1.value == 1.0);
}

TEST_CASE("metrics are invariant under joint permutation") {
  SplitMix64 rng(9);
  std::vector<int> y_true(200), y_pred(200);
  for (std::size_t i = 0; i < 200; ++i) {
    y_true[i] = static_cast<int>(rng.next_below(2));
    y_pred[i] = static_cast<int>(rng.next_below(2));
  }
  const ConfusionCounts before = count_confusion(y_true, y_pred);
  for (std::size_t i = 199; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(y_true[i], y_true[j]);
    std::swap(y_pred[i], y_pred[j]);
  }
  CHECK(count_confusion(y_true, y_pred) == before);
}

TEST_CASE("f1 lies between precision and recall over random counts") {
  SplitMix64 rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    const ConfusionCounts counts{rng.next_below(50) + 1, rng.next_below(50),
                                 rng.next_below(50), rng.next_below(50)};
    const MetricsReport r = compute_metrics(counts);
    REQUIRE(r.precision.defined());
    REQUIRE(r.recall.defined());
    const double p = *r.precision.value;
    const double q = *r.recall.value;

    const double total = static_cast<double>(counts.total());
    CHECK(*r.accuracy.value ==
          doctest::Approx(static_cast<double>(counts.tp + counts.tn) / total)
              .epsilon(1e-12));
    CHECK(p == doctest::Approx(static_cast<double>(counts.tp) /
                               static_cast<double>(counts.tp + counts.fp))
                   .epsilon(1e-12));
    CHECK(q == doctest::Approx(static_cast<double>(counts.tp) /
                               static_cast<double>(counts.tp + counts.fn))
                   .epsilon(1e-12));
    if (p + q > 0.0) {
      REQUIRE(r.f1.defined());
      CHECK(*r.f1.value <= std::max(p, q) + 1e-12);
      CHECK(*r.f1.value >= std::min(p, q) - 1e-12);
    }
  }
}

TEST_CASE("undefined metric cases carry their reasons") {
  const MetricsReport none = compute_metrics(ConfusionCounts{0, 0, 0, 0});
  CHECK_FALSE(none.accuracy.defined());
  CHECK(none.accuracy.reason == "no records evaluated");

  const MetricsReport no_pos = compute_metrics(std::vector<int>{0, 0},
                                               std::vector<int>{0, 1});
  CHECK_FALSE(no_pos.recall.defined());
  CHECK(no_pos.recall.reason == "no positive labels");
  REQUIRE(no_pos.precision.defined());
  CHECK(*no_pos.precision.value == 0.0);

  const MetricsReport zero_f1 = compute_metrics(std::vector<int>{1, 0},
                                                std::vector<int>{0, 1});
  CHECK_FALSE(zero_f1.f1.defined());
  CHECK(zero_f1.f1.reason == "precision and recall are both zero");
}

TEST_CASE("prediction vectors must align") {
  const std::vector<int> a{1, 0};
  const std::vector<int> b{1};
  CHECK_THROWS_AS(count_confusion(a, b), ContractError);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}),
                  ContractError);
}

TEST_CASE("ten records in ten folds give singleton test folds") {
  std::vector<std::vector<double>> rows(10, {0.0});
  std::vector<int> labels(10, 0);
  for (std::size_t i = 0; i < 10; ++i) rows[i][0] = static_cast<double>(i);
  labels[3] = 1;
  const Dataset ds = make_dataset(rows, labels);
  const std::vector<int> folds = assign_folds(ds, 10, 1, false);
  std::vector<int> count(10, 0);
  for (int f : folds) count[static_cast<std::size_t>(f)]++;
  for (int c : count) CHECK(c == 1);
}

TEST_CASE("fold assignment is deterministic in the seed") {
  const Dataset ds = planted(200, 3, 0.1, 2);
  CHECK(assign_folds(ds, 5, 7, true) == assign_folds(ds, 5, 7, true));
  CHECK(assign_folds(ds, 5, 7, true) != assign_folds(ds, 5, 8, true));
}

TEST_CASE("folds partition every record exactly once") {
  const Dataset ds = planted(103, 3, 0.2, 15);
  const std::vector<int> folds = assign_folds(ds, 7, 4, true);
  REQUIRE(folds.size() == 103);
  std::vector<std::size_t> per_fold(7, 0);
  for (int f : folds) {
    REQUIRE(f >= 0);
    REQUIRE(f < 7);
    per_fold[static_cast<std::size_t>(f)]++;
  }
  std::size_t total = 0;
  for (std::size_t c : per_fold) {
    CHECK(c >= 103 / 7);
    total += c;
  }
  CHECK(total == 103);
}

TEST_CASE("stratified folds keep class balance within one record per fold") {
  const Dataset ds = planted(500, 3, 0.1, 33);
  const std::vector<int> folds = assign_folds(ds, 5, 3, true);
  std::vector<std::size_t> pos_per_fold(5, 0);
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    if (ds.label(i) == 1) pos_per_fold[static_cast<std::size_t>(folds[i])]++;
  }
  for (std::size_t c : pos_per_fold) CHECK(c == 10);
}

TEST_CASE("fold requests that cannot be satisfied are rejected") {
  const Dataset ds = planted(20, 2, 0.1, 4);
  CHECK_THROWS_AS(assign_folds(ds, 1, 1, false), ConfigError);
  CHECK_THROWS_AS(assign_folds(ds, 21, 1, false), DataError);
  // Two positives cannot stratify across ten folds.
  CHECK_THROWS_WITH_AS(assign_folds(ds, 10, 1, true), doctest::Contains("class"),
                       DataError);
  CHECK_NOTHROW(assign_folds(ds, 10, 1, false));
}

TEST_CASE("cross-validation of gbt on the separable set reaches 0.99") {
  const Dataset ds = planted(300, 4, 0.1, 19);
  ModelConfig cfg;
  cfg.gbt.n_rounds = 25;
  const CvResult cv = kfold_cv(ds, cfg, 10, 19, true);
  REQUIRE(cv.folds.size() == 10);
  REQUIRE(cv.summary.accuracy.mean.defined());
  CHECK(*cv.summary.accuracy.mean.value >= 0.99);
}

TEST_CASE("cross-validation is deterministic in the seed") {
  const Dataset ds = planted(150, 3, 0.1, 25);
  ModelConfig cfg;
  cfg.gbt.n_rounds = 5;
  const CvResult a = kfold_cv(ds, cfg, 5, 9, true);
  const CvResult b = kfold_cv(ds, cfg, 5, 9, true);
  REQUIRE(a.folds.size() == b.folds.size());
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    CHECK(a.folds[f].report.counts == b.folds[f].report.counts);
  }
}

TEST_CASE("summaries use the population stddev over defined folds") {
  std::vector<FoldResult> folds(2);
  folds[0].fold = 0;
  folds[0].report = compute_metrics(ConfusionCounts{8, 2, 0, 0});
  folds[1].fold = 1;
  folds[1].report = compute_metrics(ConfusionCounts{6, 4, 0, 0});
  const CvSummary s = summarize_folds(folds);
  REQUIRE(s.precision.mean.defined());
  CHECK(*s.precision.mean.value == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(*s.precision.stddev.value == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("a metric undefined in every fold is undefined in the summary") {
  std::vector<FoldResult> folds(2);
  folds[0].report = compute_metrics(std::vector<int>{0, 0}, std::vector<int>{0, 0});
  folds[1].report = compute_metrics(std::vector<int>{0, 0}, std::vector<int>{0, 0});
  const CvSummary s = summarize_folds(folds);
  CHECK_FALSE(s.recall.mean.defined());
  CHECK(s.recall.mean.reason == "undefined in every fold");
}
