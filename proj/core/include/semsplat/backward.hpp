#pragma once

#include <vector>

#include "semsplat/rasterizer.hpp"

namespace semsplat {

/// Gradients mirroring the trainable parameters of a Scene.
template <typename Real>
struct GradientBuffer {
  GaussianSoA<Real> gaussians;  // same shape as the scene's Gaussians
  SemanticHead<Real> head;
  /// |dL/d(mean2d)| in NDC units for the last backward call, per Gaussian.
  std::vector<Real> viewspace_grad;
  /// 1 when the Gaussian was projected in the last backward call.
  std::vector<char> visible;

  GradientBuffer() = default;
  explicit GradientBuffer(const Scene<Real>& scene) { reset(scene); }

  /// Resizes to the scene's shape and zeroes every entry.
  void reset(const Scene<Real>& scene);
  bool all_zero() const;
};

/// Analytic gradients of the blended color and feature maps w.r.t. every
/// Gaussian parameter, given upstream dL/dColor and dL/dFeature (either may
/// be null). Accumulates into `grads`. When `state` is null the frame is
/// re-prepared with `cfg`; otherwise it must come from the matching forward.
template <typename Real>
void backward_render(const Scene<Real>& scene, const Camera& camera, const Image<Real>* d_color,
                     const Image<Real>* d_feature, GradientBuffer<Real>& grads,
                     const RasterConfig& cfg = {}, const RasterState<Real>* state = nullptr);

template <typename Real>
GradientBuffer<Real> backward_render(const Scene<Real>& scene, const Camera& camera,
                                     const Image<Real>* d_color, const Image<Real>* d_feature,
                                     const RasterConfig& cfg = {}) {
  GradientBuffer<Real> grads(scene);
  backward_render(scene, camera, d_color, d_feature, grads, cfg);
  return grads;
}

}  // namespace semsplat
