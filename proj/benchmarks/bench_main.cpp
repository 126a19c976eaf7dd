#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "qpemerge/lstm.hpp"
#include "qpemerge/metrics.hpp"
#include "qpemerge/rng.hpp"
#include "qpemerge/timeutil.hpp"
#include "qpemerge/trainer.hpp"

namespace {

using namespace qpemerge;

LstmParams random_params(const LstmShape& shape, std::uint64_t seed) {
  Rng rng(seed);
  LstmParams p(shape);
  for (double& v : p.flat()) {
    v = rng.uniform(-0.3, 0.3);
  }
  return p;
}

std::vector<double> random_window(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) {
    x = rng.normal();
  }
  return v;
}

void BM_CellForward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto p = random_params({2, hidden}, 1);
  const std::vector<double> x{0.3, -0.7};
  LstmState s = LstmState::zeros(hidden);
  for (auto _ : state) {
    auto step = lstm_cell_forward(x, s, p);
    benchmark::DoNotOptimize(step.next.h.data());
  }
}
BENCHMARK(BM_CellForward)->Arg(2)->Arg(12)->Arg(64);

void BM_BackpropWindow(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto seq_len = static_cast<std::size_t>(state.range(1));
  const auto p = random_params({2, hidden}, 2);
  const auto w = random_window(seq_len * 2, 3);
  BpttWorkspace ws;
  LstmParams grads(p.shape());
  for (auto _ : state) {
    benchmark::DoNotOptimize(ws.accumulate({w, seq_len, 2}, 0.5, p, grads, 1.0));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_BackpropWindow)->Args({12, 12})->Args({12, 24})->Args({32, 12});

// One epoch over the window count of a typical fold (716 train targets).
void BM_TrainEpoch(benchmark::State& state) {
  const std::size_t n = 1023;
  AlignedDataset ds;
  ds.station_id = "B";
  ds.feature_names = {"imerg_e", "stage4"};
  ds.features = random_window(2 * n, 4);
  ds.target = random_window(n, 5);
  WindowIndices idx;
  idx.train.resize(716 - 11);
  std::iota(idx.train.begin(), idx.train.end(), std::size_t{11});
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) {
    auto r = train(ds, idx, cfg);
    benchmark::DoNotOptimize(r.params.flat().data());
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_EvaluateAll(benchmark::State& state) {
  const std::size_t n = 1535;
  Rng rng(6);
  std::vector<double> p(n);
  std::vector<double> o(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = rng.uniform01() < 0.5 ? 0.0 : rng.uniform01() * 5;
    o[i] = rng.uniform01() < 0.5 ? 0.0 : rng.uniform01() * 5;
  }
  const auto start = parse_timestamp("2021-12-01T01:00:00Z");
  const auto ps = make_series("B", Product::merged(), start, p);
  const auto os = make_series("B", Product::gauge(), start, o);
  for (auto _ : state) {
    auto r = evaluate_all(ps, os, kDefaultEventThreshold);
    benchmark::DoNotOptimize(r.n);
  }
}
BENCHMARK(BM_EvaluateAll);

}  // namespace

BENCHMARK_MAIN();
