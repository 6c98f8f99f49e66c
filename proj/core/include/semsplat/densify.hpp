#pragma once

#include <random>
#include <vector>

#include "semsplat/backward.hpp"
#include "semsplat/optimizer.hpp"

namespace semsplat {

struct DensifyConfig {
  bool enabled = true;
  int start_iteration = 500;
  int stop_iteration = 15000;
  int interval = 100;
  /// Mean NDC-space positional gradient above which a Gaussian is densified.
  double grad_threshold = 2e-4;
  /// Gaussians with max scale above percent_dense * extent are split, others cloned.
  double percent_dense = 0.01;
  double min_opacity = 0.005;
  int opacity_reset_interval = 3000;
  double opacity_reset_value = 0.01;
  int split_count = 2;
  double split_scale_divisor = 1.6;
  /// Gaussians whose largest scale exceeds this fraction of the extent are
  /// pruned; 0 disables the check.
  double max_world_scale = 0.0;
};

/// Running view-space gradient statistics between densification passes.
struct DensifyStats {
  std::vector<double> grad_sum;
  std::vector<int> count;

  void resize(std::size_t n);
  template <typename Real>
  void accumulate(const GradientBuffer<Real>& grads);
  void keep_rows(std::span<const char> keep);
  void clear();
};

struct DensifyResult {
  int cloned = 0;
  int split = 0;
  int pruned = 0;
};

/// Clones small and splits large high-gradient Gaussians, then prunes
/// near-transparent ones. New rows inherit every attribute (including the
/// semantic code) of their source; optimizer rows follow the Gaussians and
/// start from zero moments. Statistics are cleared afterwards.
template <typename Real>
DensifyResult densify_and_prune(Scene<Real>& scene, SceneOptimizer<Real>& optimizer,
                                DensifyStats& stats, const DensifyConfig& cfg,
                                double scene_extent, std::mt19937_64& rng);

/// Removes Gaussians whose opacity is below `min_opacity`.
template <typename Real>
int prune_transparent(Scene<Real>& scene, SceneOptimizer<Real>* optimizer, DensifyStats* stats,
                      double min_opacity);

/// Caps every opacity at `value` and clears the opacity optimizer moments.
template <typename Real>
void reset_opacity(Scene<Real>& scene, SceneOptimizer<Real>& optimizer, double value);

}  // namespace semsplat
