#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "flowshap/pipeline.hpp"
#include "flowshap/prng.hpp"
#include "flowshap/shap.hpp"
#include "flowshap/synthetic.hpp"

namespace {

using namespace flowshap;

Dataset planted(std::size_t n, std::size_t d) {
  SynthConfig cfg;
  cfg.n_rows = n;
  cfg.n_features = d;
  cfg.contamination = 0.05;
  return generate_synthetic(cfg, 42);
}

ModelConfig config_for(EnsembleKind kind, int trees, int depth) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.gbt.n_rounds = trees;
  cfg.gbt.max_depth = depth;
  cfg.rf.n_trees = trees;
  cfg.rf.max_depth = depth;
  cfg.iforest.n_trees = trees;
  return cfg;
}

void BM_TrainGbt(benchmark::State& state) {
  const Dataset ds = planted(static_cast<std::size_t>(state.range(0)), 10);
  const ModelConfig cfg = config_for(EnsembleKind::kGbt, 50, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_model(ds, cfg, 42));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainGbt)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_TrainRf(benchmark::State& state) {
  const Dataset ds = planted(static_cast<std::size_t>(state.range(0)), 10);
  const ModelConfig cfg = config_for(EnsembleKind::kRandomForest, 50, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_model(ds, cfg, 42));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainRf)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_TrainIforest(benchmark::State& state) {
  const Dataset ds = planted(static_cast<std::size_t>(state.range(0)), 10);
  const ModelConfig cfg = config_for(EnsembleKind::kIsolationForest, 100, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_model(ds, cfg, 42));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainIforest)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Score(benchmark::State& state) {
  const Dataset ds = planted(2000, 10);
  const TrainedModel model = train_model(ds, config_for(EnsembleKind::kGbt, 100, 6), 42);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_score(model, ds.row(i)));
    i = (i + 1) % ds.n_rows();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Score);

void BM_TreeShap(benchmark::State& state) {
  const Dataset ds = planted(2000, 10);
  const TrainedModel model = train_model(
      ds, config_for(EnsembleKind::kGbt, static_cast<int>(state.range(0)), 6), 42);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain_instance(model, ds.row(i)));
    i = (i + 1) % ds.n_rows();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TreeShap)->Arg(25)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_BruteForceShapley(benchmark::State& state) {
  const Dataset ds = planted(500, static_cast<std::size_t>(state.range(0)));
  const TrainedModel model = train_model(ds, config_for(EnsembleKind::kGbt, 10, 3), 42);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(brute_force_shapley(model.ensemble, ds.row(i)));
    i = (i + 1) % ds.n_rows();
  }
}
BENCHMARK(BM_BruteForceShapley)->Arg(6)->Arg(10)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
