#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semsplat/image.hpp"

namespace semsplat {

using Mask = Image<std::uint8_t>;

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over all channels; identical images give kPsnrCap.
template <typename Real>
double psnr(const Image<Real>& a, const Image<Real>& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over every fully-contained 11x11 Gaussian window (sigma 1.5),
/// averaged across channels. Images smaller than the window are rejected.
template <typename Real>
Real ssim(const Image<Real>& a, const Image<Real>& b);

template <typename Real>
struct SsimGradient {
  Real value = 0;
  Image<Real> d_b;  // d ssim(a, b) / d b
};

template <typename Real>
SsimGradient<Real> ssim_with_gradient(const Image<Real>& a, const Image<Real>& b);

/// Mean over queries of |pred & gt| / |pred | gt|; a query whose masks are
/// both empty scores 1.
double miou(std::span<const Mask> pred, std::span<const Mask> gt);
double iou(const Mask& pred, const Mask& gt);

struct LocalizationResult {
  double accuracy = 0.0;
  int evaluated = 0;
  int correct = 0;
  std::vector<int> skipped;  // query indices with an empty ground-truth mask
};

/// Fraction of queries whose highest-relevancy pixel (first in row-major
/// order on ties) lies inside the ground-truth mask.
LocalizationResult localization_accuracy(std::span<const Image<float>> relevancy_maps,
                                         std::span<const Mask> gt);

/// Binary mask of pixels equal to `label`.
Mask label_mask(const LabelMap& labels, int label);

}  // namespace semsplat
