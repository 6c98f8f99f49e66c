#include "semsplat/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "semsplat/error.hpp"
#include "semsplat/metrics.hpp"

namespace semsplat {

void LossConfig::validate() const {
  if (!(lambda_dssim >= 0.0 && lambda_dssim <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "lambda_dssim must lie in [0, 1]");
  }
  if (!(gamma_labeled >= 0.0) || !(gamma_undetected >= 0.0)) {
    throw Error(ErrorCode::kConfiguration, "pixel weights must be non-negative");
  }
  if (!(semantic_weight >= 0.0)) {
    throw Error(ErrorCode::kConfiguration, "semantic_weight must be non-negative");
  }
}

template <typename Real>
PhotometricLoss<Real> loss_photometric(const Image<Real>& rendered, const Image<Real>& target,
                                       const LossConfig& cfg) {
  if (!rendered.same_shape(target)) throw_invalid("loss_photometric: shape mismatch");
  if (rendered.empty()) throw_invalid("loss_photometric: empty image");
  const Real lambda = Real(cfg.lambda_dssim);
  const Real n = Real(rendered.data.size());

  PhotometricLoss<Real> out;
  out.d_rendered = Image<Real>(rendered.width, rendered.height, rendered.channels);
  Real abs_sum = 0;
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    const Real d = rendered.data[i] - target.data[i];
    abs_sum += std::abs(d);
    const Real sign = d > Real(0) ? Real(1) : (d < Real(0) ? Real(-1) : Real(0));
    out.d_rendered.data[i] = (Real(1) - lambda) * sign / n;
  }
  out.l1 = abs_sum / n;
  out.loss = (Real(1) - lambda) * out.l1;

  if (lambda > Real(0)) {
    SsimGradient<Real> s = ssim_with_gradient(target, rendered);
    out.ssim = s.value;
    out.loss += lambda * (Real(1) - s.value) / Real(2);
    for (std::size_t i = 0; i < out.d_rendered.data.size(); ++i) {
      out.d_rendered.data[i] -= lambda * s.d_b.data[i] / Real(2);
    }
  } else {
    out.ssim = Real(1);
  }
  return out;
}

template <typename Real>
SemanticLoss<Real> loss_semantic(const Image<Real>& feature_map, const SemanticHead<Real>& head,
                                 const LabelMap& labels, const LossConfig& cfg) {
  if (feature_map.channels != kSemanticDim) throw_invalid("loss_semantic: feature map must have 3 channels");
  if (feature_map.width != labels.width || feature_map.height != labels.height ||
      labels.channels != 1) {
    throw_invalid("loss_semantic: label map shape differs from the feature map");
  }
  const int classes = head.num_classes();
  const std::size_t pixels = labels.pixel_count();
  if (pixels == 0) throw_invalid("loss_semantic: empty label map");

  SemanticLoss<Real> out;
  out.d_feature = Image<Real>(feature_map.width, feature_map.height, kSemanticDim);
  out.d_head = SemanticHead<Real>(classes);
  const Real inv_count = Real(1) / Real(pixels);
  std::vector<Real> z(static_cast<std::size_t>(classes));

  for (std::size_t p = 0; p < pixels; ++p) {
    const int label = labels.data[p];
    if (label >= classes) {
      throw_invalid("loss_semantic: label " + std::to_string(label) + " at pixel " +
                    std::to_string(p) + " exceeds the dictionary");
    }
    const Real gamma = Real(label == 0 ? cfg.gamma_undetected : cfg.gamma_labeled);
    const Real* f = &feature_map.data[p * kSemanticDim];
    if (!std::isfinite(f[0]) || !std::isfinite(f[1]) || !std::isfinite(f[2])) {
      throw_invalid("loss_semantic: non-finite feature at pixel " + std::to_string(p));
    }
    head.logits(f, z.data());
    const Real zmax = *std::max_element(z.begin(), z.end());
    Real denom = 0;
    for (Real& v : z) {
      v = std::exp(v - zmax);
      denom += v;
    }
    // z now holds unnormalized probabilities.
    const Real log_prob = std::log(z[label] / denom);
    out.loss -= gamma * log_prob * inv_count;
    if (gamma == Real(0)) continue;
    Real* df = &out.d_feature.data[p * kSemanticDim];
    for (int k = 0; k < classes; ++k) {
      const Real dz = gamma * inv_count * (z[k] / denom - (k == label ? Real(1) : Real(0)));
      const Real* a = &head.weight[static_cast<std::size_t>(k) * kSemanticDim];
      Real* da = &out.d_head.weight[static_cast<std::size_t>(k) * kSemanticDim];
      for (int j = 0; j < kSemanticDim; ++j) {
        df[j] += a[j] * dz;
        da[j] += dz * f[j];
      }
      out.d_head.bias[k] += dz;
    }
  }
  return out;
}

template PhotometricLoss<float> loss_photometric(const Image<float>&, const Image<float>&,
                                                 const LossConfig&);
template PhotometricLoss<double> loss_photometric(const Image<double>&, const Image<double>&,
                                                  const LossConfig&);
template SemanticLoss<float> loss_semantic(const Image<float>&, const SemanticHead<float>&,
                                           const LabelMap&, const LossConfig&);
template SemanticLoss<double> loss_semantic(const Image<double>&, const SemanticHead<double>&,
                                            const LabelMap&, const LossConfig&);

}  // namespace semsplat
