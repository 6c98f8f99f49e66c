#include "fixture/perf_scene.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include "semsplat/rasterizer.hpp"
#include "semsplat/semantics.hpp"
#include "semsplat/trainer.hpp"

namespace semsplat::fixture {

Scene<float> make_perf_scene(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Scene<float> scene(1, SemanticDictionary({"red", "green", "blue"}));
  for (int i = 0; i < count; ++i) {
    GaussianRow<float> row;
    row.mean = Vec3<float>(float(3.6 * uni(rng) - 1.8), float(3.6 * uni(rng) - 1.8), float(uni(rng) - 0.5));
    Vec4<float> q(float(normal(rng)), float(normal(rng)), float(normal(rng)), float(normal(rng)));
    row.rotation = q / q.norm();
    for (int k = 0; k < 3; ++k) row.log_scale[k] = float(-4.6 + 1.2 * uni(rng));
    row.opacity_logit = logit(float(0.3 + 0.6 * uni(rng)));
    row.sh.assign(3 * sh_basis_count(1), 0.0f);
    for (auto& c : row.sh) c = float(0.3 * normal(rng));
    const int cls = static_cast<int>(rng() % 3);
    row.semantic = Vec3<float>::Zero();
    row.semantic[cls] = 3.0f;
    scene.gaussians.push_back(row);
  }
  for (int k = 1; k <= 3; ++k) scene.head.weight[k * kSemanticDim + (k - 1)] = 4.0f;
  scene.head.bias[0] = 1.0f;
  scene.embeddings.dim = 4;
  for (int k = 0; k < 4; ++k) {
    std::vector<float> e(4, 0.0f);
    e[k] = 1.0f;
    if (k < 3) {
      scene.embeddings.add_entry(e);
    } else {
      scene.embeddings.add_negative("object", e);
    }
  }
  return scene;
}

Camera perf_camera(int size) {
  return Camera::look_at({0.0, 0.0, -4.0}, {0.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, size, size, size, size);
}

Dataset make_perf_dataset(const Scene<float>& truth, int size) {
  Dataset ds;
  ds.dictionary = truth.dictionary;
  ds.embeddings = truth.embeddings;
  Frame f;
  f.name = "perf";
  f.camera = perf_camera(size);
  const auto out = render(truth, f.camera);
  f.image = out.color;
  f.labels = pixel_label_map(out.feature, truth.head);
  ds.frames.push_back(std::move(f));
  ds.validate();
  return ds;
}

double median_step_ms(const Dataset& dataset, const Scene<float>& init, int steps) {
  TrainConfig cfg;
  cfg.iterations = steps + 1;
  cfg.sh_degree = init.sh_degree();
  cfg.densify.enabled = false;
  Trainer trainer(dataset, init, cfg, LossConfig{});
  trainer.step();
  std::vector<double> ms;
  for (int i = 0; i < steps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    trainer.step();
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::nth_element(ms.begin(), ms.begin() + static_cast<std::ptrdiff_t>(ms.size() / 2), ms.end());
  return ms[ms.size() / 2];
}

}  // namespace semsplat::fixture
