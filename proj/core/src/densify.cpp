#include "semsplat/densify.hpp"

#include <algorithm>
#include <cmath>

namespace semsplat {

void DensifyStats::resize(std::size_t n) {
  grad_sum.resize(n, 0.0);
  count.resize(n, 0);
}

template <typename Real>
void DensifyStats::accumulate(const GradientBuffer<Real>& grads) {
  resize(grads.visible.size());
  for (std::size_t i = 0; i < grads.visible.size(); ++i) {
    if (!grads.visible[i]) continue;
    grad_sum[i] += static_cast<double>(grads.viewspace_grad[i]);
    count[i] += 1;
  }
}

void DensifyStats::keep_rows(std::span<const char> keep) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < keep.size() && i < grad_sum.size(); ++i) {
    if (!keep[i]) continue;
    grad_sum[out] = grad_sum[i];
    count[out] = count[i];
    ++out;
  }
  grad_sum.resize(out);
  count.resize(out);
}

void DensifyStats::clear() {
  std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
  std::fill(count.begin(), count.end(), 0);
}

template <typename Real>
int prune_transparent(Scene<Real>& scene, SceneOptimizer<Real>* optimizer, DensifyStats* stats,
                      double min_opacity) {
  auto& g = scene.gaussians;
  std::vector<char> keep(g.size(), 1);
  int removed = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (static_cast<double>(g.opacity(i)) < min_opacity) {
      keep[i] = 0;
      ++removed;
    }
  }
  if (removed == 0) return 0;
  g.keep_rows(keep);
  if (optimizer) optimizer->keep_rows(keep);
  if (stats) stats->keep_rows(keep);
  return removed;
}

template <typename Real>
DensifyResult densify_and_prune(Scene<Real>& scene, SceneOptimizer<Real>& optimizer,
                                DensifyStats& stats, const DensifyConfig& cfg,
                                double scene_extent, std::mt19937_64& rng) {
  DensifyResult result;
  auto& g = scene.gaussians;
  const std::size_t n = g.size();
  stats.resize(n);
  const double split_above = cfg.percent_dense * scene_extent;

  std::vector<char> to_clone(n, 0), to_split(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (stats.count[i] == 0) continue;
    const double mean_grad = stats.grad_sum[i] / stats.count[i];
    if (mean_grad < cfg.grad_threshold) continue;
    const double max_scale = std::exp(static_cast<double>(g.log_scale(i).maxCoeff()));
    if (max_scale <= split_above) {
      to_clone[i] = 1;
    } else {
      to_split[i] = 1;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!to_clone[i]) continue;
    g.push_back(g.row(i));
    ++result.cloned;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  const Real log_div = static_cast<Real>(std::log(cfg.split_scale_divisor));
  for (std::size_t i = 0; i < n; ++i) {
    if (!to_split[i]) continue;
    const Mat3<Real> rot = rotation_matrix<Real>(g.rotation(i));
    const Vec3<Real> scale = g.log_scale(i).array().exp().matrix();
    for (int s = 0; s < cfg.split_count; ++s) {
      GaussianRow<Real> row = g.row(i);
      Vec3<Real> offset;
      for (int k = 0; k < 3; ++k) offset[k] = static_cast<Real>(normal(rng)) * scale[k];
      row.mean += rot * offset;
      row.log_scale.array() -= log_div;
      g.push_back(row);
    }
    ++result.split;
  }

  // New rows carry zero moments; split sources are removed below.
  optimizer.append_rows(scene);
  stats.resize(g.size());
  std::vector<char> keep(g.size(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (to_split[i]) keep[i] = 0;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool transparent = static_cast<double>(g.opacity(i)) < cfg.min_opacity;
    const bool oversized =
        cfg.max_world_scale > 0.0 &&
        std::exp(static_cast<double>(g.log_scale(i).maxCoeff())) > cfg.max_world_scale * scene_extent;
    if (keep[i] && (transparent || oversized)) {
      keep[i] = 0;
      ++result.pruned;
    }
  }
  g.keep_rows(keep);
  optimizer.keep_rows(keep);
  stats.keep_rows(keep);
  stats.clear();
  return result;
}

template <typename Real>
void reset_opacity(Scene<Real>& scene, SceneOptimizer<Real>& optimizer, double value) {
  const Real cap = logit(static_cast<Real>(value));
  for (auto& v : scene.gaussians.opacity_logits) v = std::min(v, cap);
  optimizer.reset_group(ParamGroup::kOpacity);
}

template void DensifyStats::accumulate(const GradientBuffer<float>&);
template void DensifyStats::accumulate(const GradientBuffer<double>&);
template int prune_transparent(Scene<float>&, SceneOptimizer<float>*, DensifyStats*, double);
template int prune_transparent(Scene<double>&, SceneOptimizer<double>*, DensifyStats*, double);
template DensifyResult densify_and_prune(Scene<float>&, SceneOptimizer<float>&, DensifyStats&,
                                         const DensifyConfig&, double, std::mt19937_64&);
template DensifyResult densify_and_prune(Scene<double>&, SceneOptimizer<double>&, DensifyStats&,
                                         const DensifyConfig&, double, std::mt19937_64&);
template void reset_opacity(Scene<float>&, SceneOptimizer<float>&, double);
template void reset_opacity(Scene<double>&, SceneOptimizer<double>&, double);

}  // namespace semsplat
