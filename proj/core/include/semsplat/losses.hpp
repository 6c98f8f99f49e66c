#pragma once

#include "semsplat/image.hpp"
#include "semsplat/scene.hpp"

namespace semsplat {

struct LossConfig {
  double lambda_dssim = 0.2;
  double gamma_labeled = 1.0;
  double gamma_undetected = 0.1;
  double semantic_weight = 1.0;

  void validate() const;
};

template <typename Real>
struct PhotometricLoss {
  Real loss = 0;
  Real l1 = 0;
  Real ssim = 0;
  Image<Real> d_rendered;
};

/// (1 - lambda) * mean|target - rendered| + lambda * (1 - SSIM) / 2, with the
/// gradient w.r.t. the rendered image.
template <typename Real>
PhotometricLoss<Real> loss_photometric(const Image<Real>& rendered, const Image<Real>& target,
                                       const LossConfig& cfg);

template <typename Real>
struct SemanticLoss {
  Real loss = 0;
  Image<Real> d_feature;
  SemanticHead<Real> d_head;
};

/// Pixel-weighted cross-entropy of softmax(A f + b) against `labels`,
/// averaged over all pixels. Undetected pixels (label 0) use
/// gamma_undetected, all others gamma_labeled.
template <typename Real>
SemanticLoss<Real> loss_semantic(const Image<Real>& feature_map, const SemanticHead<Real>& head,
                                 const LabelMap& labels, const LossConfig& cfg);

}  // namespace semsplat
