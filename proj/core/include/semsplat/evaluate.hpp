#pragma once

#include <string>
#include <vector>

#include "semsplat/dataset.hpp"
#include "semsplat/rasterizer.hpp"
#include "semsplat/scene.hpp"

namespace semsplat {

struct ClassScore {
  std::string label;
  double iou = 0.0;
};

struct EvalReport {
  std::string name;
  int frames = 0;
  std::size_t num_gaussians = 0;
  double psnr = 0.0;  // mean over frames
  double ssim = 0.0;  // mean over frames
  /// Mean over dictionary entries present in the ground truth of the IoU
  /// between predicted and ground-truth pixels, pooled across frames.
  double miou = 0.0;
  std::vector<ClassScore> per_class;
  /// Each entry's own embedding is used as the prompt, once per frame in
  /// which the entry is visible.
  double localization_accuracy = 0.0;
  int localization_queries = 0;
  double wall_ms = 0.0;

  std::string to_json() const;
};

/// Per-frame label prediction (argmax of the rendered semantic head).
LabelMap predict_labels(const Scene<float>& scene, const Camera& camera,
                        const RasterConfig& cfg = {});

/// Label mIoU over entries 1..N pooled across views.
double label_miou(std::span<const LabelMap> pred, std::span<const LabelMap> gt, int num_entries,
                  std::vector<double>* per_class = nullptr);

EvalReport evaluate(const Scene<float>& scene, const Dataset& dataset, const RasterConfig& cfg = {},
                    const std::string& name = "scene");

}  // namespace semsplat
