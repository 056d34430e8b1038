#include <benchmark/benchmark.h>

#include "dictnet/dictionary.hpp"
#include "dictnet/layer.hpp"
#include "dictnet/rng.hpp"

using namespace dictnet;

namespace {
// A 784 -> 100 predicted layer with 10 SE columns, the shape the MLP
// experiments sweep.
PredictedDenseLayer make_layer(double fraction, ComputeOrder order) {
  const WeightSpace space = WeightSpace::grid2d(28, 28, 1);
  const ColumnFamily fam = make_columns(space, 10, fraction, 42);
  DictionaryStrategy se = DictionaryStrategy::parse("SE");
  std::vector<BuiltDictionary> dicts;
  for (std::size_t j = 0; j < fam.count(); ++j)
    dicts.push_back(build_dictionary(se, fam.columns[j], nullptr, 100 + j));
  PredictedDenseLayer layer(std::move(dicts), 100, Activation::Sigmoid, 7);
  layer.order = order;
  return layer;
}

Matrix random_batch(std::size_t n, std::size_t d) {
  Rng rng(3);
  Matrix m(n, d);
  for (double& v : m.raw()) v = rng.uniform();
  return m;
}
}  // namespace

static void BM_PredictedForward(benchmark::State& state) {
  const double fraction = state.range(0) / 100.0;
  const auto order = state.range(1) == 0 ? ComputeOrder::Pooled : ComputeOrder::Materialized;
  PredictedDenseLayer layer = make_layer(fraction, order);
  const Matrix batch = random_batch(100, 784);
  for (auto _ : state) {
    Signal out = layer.forward(batch);
    benchmark::DoNotOptimize(&out);
  }
}
BENCHMARK(BM_PredictedForward)
    ->Args({10, 0})
    ->Args({10, 1})
    ->Args({50, 0})
    ->Args({50, 1})
    ->ArgNames({"pct", "mat"});

static void BM_PredictedTrainStep(benchmark::State& state) {
  PredictedDenseLayer layer = make_layer(0.5, ComputeOrder::Auto);
  const Matrix batch = random_batch(100, 784);
  Matrix upstream = random_batch(100, 100);
  for (auto _ : state) {
    layer.zero_grad();
    layer.forward(batch);
    Signal gin = layer.backward(upstream, false);
    benchmark::DoNotOptimize(&gin);
  }
}
BENCHMARK(BM_PredictedTrainStep);

BENCHMARK_MAIN();
