#include <benchmark/benchmark.h>

#include "fixture/perf_scene.hpp"
#include "semsplat/trainer.hpp"

using namespace semsplat;

// Args: image size, Gaussian count. Reports one optimizer iteration
// (render, losses, backward, Adam) on a one-frame dataset.
static void BM_TrainStep(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const int count = static_cast<int>(state.range(1));
  const auto truth = fixture::make_perf_scene(count, 11);
  const auto dataset = fixture::make_perf_dataset(truth, size);
  TrainConfig cfg;
  cfg.iterations = 1 << 30;
  cfg.sh_degree = 1;
  cfg.densify.enabled = false;
  Trainer trainer(dataset, fixture::make_perf_scene(count, 12), cfg, LossConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
  state.counters["px"] = size * size;
}

BENCHMARK(BM_TrainStep)
    ->Args({64, 5000})
    ->Args({128, 5000})
    ->Args({256, 5000})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
