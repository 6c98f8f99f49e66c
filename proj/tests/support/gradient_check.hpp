#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "semsplat/trainer.hpp"
#include "test_scenes.hpp"

namespace semsplat::test {

struct CoordinateCheck {
  std::string group;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradientCheckReport {
  std::vector<CoordinateCheck> coords;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& c : coords) m = std::max(m, c.rel_error);
    return m;
  }
  double fraction_below(double tol) const {
    if (coords.empty()) return 1.0;
    const auto ok = std::count_if(coords.begin(), coords.end(),
                                  [tol](const CoordinateCheck& c) { return c.rel_error < tol; });
    return static_cast<double>(ok) / static_cast<double>(coords.size());
  }
  bool covers(const std::string& group) const {
    return std::any_of(coords.begin(), coords.end(),
                       [&](const CoordinateCheck& c) { return c.group == group; });
  }
};

struct LossProblem {
  Scene<double> scene;
  Camera camera;
  Image<double> target;
  LabelMap labels;
  LossConfig loss;
  RasterConfig raster = RasterConfig::exact();
};

/// Random scene, target image and label map for a full-loss gradient check.
inline LossProblem random_loss_problem(std::uint64_t seed, int count, int size, int sh_degree,
                                       int classes = 3) {
  LossProblem p;
  RandomSceneOptions opts;
  opts.count = count;
  opts.sh_degree = sh_degree;
  opts.classes = classes;
  p.scene = random_scene<double>(seed, opts);
  p.camera = front_camera(size, size, 2.0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  p.target = Image<double>(size, size, 3);
  for (auto& v : p.target.data) v = uni(rng);
  p.labels = LabelMap(size, size, 1);
  std::uniform_int_distribution<int> lab(0, classes);
  for (auto& v : p.labels.data) v = static_cast<std::uint16_t>(lab(rng));
  p.loss.gamma_undetected = 0.1;
  return p;
}

inline double total_loss(const LossProblem& p, const Scene<double>& scene) {
  GradientBuffer<double> scratch(scene);
  return loss_and_gradients(scene, p.camera, p.target, &p.labels, p.loss, p.raster, scratch).total;
}

/// Compares analytic gradients of the total loss against central
/// differences for every coordinate of every parameter group.
inline GradientCheckReport check_loss_gradients(const LossProblem& p, double h = 1e-6,
                                                double floor = 1e-6) {
  GradientBuffer<double> grads(p.scene);
  loss_and_gradients(p.scene, p.camera, p.target, &p.labels, p.loss, p.raster, grads);

  GradientCheckReport report;
  Scene<double> work = p.scene;
  auto f = [&] { return total_loss(p, work); };
  auto check = [&](const std::string& name, std::vector<double>& values,
                   const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double numeric = central_difference(f, values[i], h);
      report.coords.push_back(
          {name, i, analytic[i], numeric, relative_error(analytic[i], numeric, floor)});
    }
  };
  for (ParamGroup g : kParamGroups) {
    check(param_group_name(g), work.gaussians.group(g), grads.gaussians.group(g));
  }
  check("head_weight", work.head.weight, grads.head.weight);
  check("head_bias", work.head.bias, grads.head.bias);
  return report;
}

}  // namespace semsplat::test
