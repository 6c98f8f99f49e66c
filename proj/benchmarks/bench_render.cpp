#include <benchmark/benchmark.h>

#include <map>

#include "fixture/perf_scene.hpp"
#include "semsplat/rasterizer.hpp"

using namespace semsplat;

namespace {

const Scene<float>& scene_of(int count) {
  static std::map<int, Scene<float>> cache;
  auto it = cache.find(count);
  if (it == cache.end()) it = cache.emplace(count, fixture::make_perf_scene(count, 11)).first;
  return it->second;
}

// Args: image size, Gaussian count.
void BM_RenderTiled(benchmark::State& state) {
  const auto& scene = scene_of(static_cast<int>(state.range(1)));
  const Camera cam = fixture::perf_camera(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(render(scene, cam));
  state.SetItemsProcessed(state.iterations() * cam.width * cam.height);
}

void BM_RenderNaive(benchmark::State& state) {
  const auto& scene = scene_of(static_cast<int>(state.range(1)));
  const Camera cam = fixture::perf_camera(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(render_naive(scene, cam));
  state.SetItemsProcessed(state.iterations() * cam.width * cam.height);
}

void BM_Project(benchmark::State& state) {
  const auto& scene = scene_of(static_cast<int>(state.range(1)));
  const Camera cam = fixture::perf_camera(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(project(scene.gaussians, cam));
}

}  // namespace

BENCHMARK(BM_RenderTiled)->Args({64, 5000})->Args({256, 5000})->Args({256, 50000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderNaive)->Args({64, 5000})->Args({256, 50000})->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_Project)->Args({256, 50000})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
