#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "semsplat/backward.hpp"
#include "semsplat/dataset.hpp"
#include "semsplat/densify.hpp"
#include "semsplat/losses.hpp"
#include "semsplat/optimizer.hpp"
#include "semsplat/rasterizer.hpp"

namespace semsplat {

struct TrainConfig {
  int iterations = 30000;
  std::uint64_t seed = 0;
  int sh_degree = 3;
  /// The active SH degree grows by one every this many iterations.
  int sh_warmup_interval = 1000;
  LearningRates lr;
  DensifyConfig densify;
  RasterConfig raster;
  /// Random initial Gaussians when the dataset has no point cloud.
  int init_random_points = 1000;
  double init_opacity = 0.1;
  /// Standard deviations of the random semantic codes and head weights.
  double init_semantic_std = 0.5;
  double init_head_std = 0.1;

  void validate() const;
};

struct IterationMetrics {
  int iteration = 0;
  double l_gs = 0.0;
  double l_ce = 0.0;
  double psnr = 0.0;
  std::size_t num_gaussians = 0;
  double wall_ms = 0.0;

  /// One newline-free JSON object.
  std::string to_json() const;
  /// Equality over every field except the wall-clock time.
  bool same_values(const IterationMetrics& other) const;
};

template <typename Real>
struct StepLoss {
  Real l_gs = 0;
  Real l_ce = 0;
  Real total = 0;
  double psnr = 0.0;
};

/// Renders `camera`, evaluates L_gs + semantic_weight * L_ce and accumulates
/// the gradient of the total into `grads` (which must match the scene).
/// `labels` may be null, which drops the semantic term.
template <typename Real>
StepLoss<Real> loss_and_gradients(const Scene<Real>& scene, const Camera& camera,
                                  const Image<Real>& target, const LabelMap* labels,
                                  const LossConfig& loss_cfg, const RasterConfig& raster_cfg,
                                  GradientBuffer<Real>& grads);

/// Mean camera center and 1.1 x the largest distance of a camera from it.
struct SceneBounds {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double extent = 1.0;
};
SceneBounds camera_bounds(const std::vector<Frame>& frames);

/// Initial scene from the dataset point cloud, or random points around the
/// cameras' common focus when it has none.
Scene<float> initialize_scene(const Dataset& dataset, const TrainConfig& cfg, std::mt19937_64& rng);

/// Single-phase trainer: geometry, appearance, semantic codes and the
/// semantic head are optimized together from the first iteration.
class Trainer {
 public:
  Trainer(const Dataset& dataset, TrainConfig cfg, LossConfig loss_cfg);
  /// Resumes from an existing scene; its dictionary must match the dataset.
  Trainer(const Dataset& dataset, Scene<float> scene, TrainConfig cfg, LossConfig loss_cfg);

  /// Runs one iteration and returns its log record.
  IterationMetrics step();
  /// Runs until cfg.iterations, invoking `on_log` after every iteration.
  void run(const std::function<void(const IterationMetrics&)>& on_log = {});

  int iteration() const { return iteration_; }
  const Scene<float>& scene() const { return scene_; }
  Scene<float>& scene() { return scene_; }
  const SceneOptimizer<float>& optimizer() const { return optimizer_; }
  const std::vector<IterationMetrics>& log() const { return log_; }
  const GradientBuffer<float>& last_gradients() const { return grads_; }
  const SceneBounds& bounds() const { return bounds_; }

 private:
  void setup();
  std::size_t next_frame();

  const Dataset& dataset_;
  TrainConfig cfg_;
  LossConfig loss_cfg_;
  std::mt19937_64 rng_;
  Scene<float> scene_;
  SceneOptimizer<float> optimizer_;
  GradientBuffer<float> grads_;
  DensifyStats stats_;
  SceneBounds bounds_;
  std::vector<std::size_t> order_;
  std::size_t order_pos_ = 0;
  int iteration_ = 0;
  std::vector<IterationMetrics> log_;
};

/// Trains from scratch and returns the scene; `log` receives every record.
Scene<float> train(const Dataset& dataset, const TrainConfig& cfg, const LossConfig& loss_cfg,
                   std::vector<IterationMetrics>* log = nullptr);

}  // namespace semsplat
