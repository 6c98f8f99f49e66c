#include "semsplat/evaluate.hpp"

#include <chrono>

#include <nlohmann/json.hpp>

#include "semsplat/error.hpp"
#include "semsplat/metrics.hpp"
#include "semsplat/semantics.hpp"

namespace semsplat {

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["frames"] = frames;
  j["num_gaussians"] = num_gaussians;
  j["psnr"] = psnr;
  j["ssim"] = ssim;
  j["miou"] = miou;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : per_class) classes.push_back({{"label", c.label}, {"iou", c.iou}});
  j["per_class"] = classes;
  j["localization_accuracy"] = localization_accuracy;
  j["localization_queries"] = localization_queries;
  j["wall_ms"] = wall_ms;
  return j.dump(2);
}

LabelMap predict_labels(const Scene<float>& scene, const Camera& camera, const RasterConfig& cfg) {
  return pixel_label_map(render(scene, camera, cfg).feature, scene.head);
}

double label_miou(std::span<const LabelMap> pred, std::span<const LabelMap> gt, int num_entries,
                  std::vector<double>* per_class) {
  if (pred.size() != gt.size()) throw_invalid("label_miou: view counts differ");
  std::vector<std::uint64_t> inter(num_entries + 1, 0), uni(num_entries + 1, 0), present(num_entries + 1, 0);
  for (std::size_t v = 0; v < pred.size(); ++v) {
    if (!pred[v].same_shape(gt[v])) throw_invalid("label_miou: shape mismatch");
    for (std::size_t p = 0; p < gt[v].data.size(); ++p) {
      const int a = pred[v].data[p];
      const int b = gt[v].data[p];
      if (b >= 1 && b <= num_entries) ++present[b];
      if (a == b) {
        if (a >= 1 && a <= num_entries) {
          ++inter[a];
          ++uni[a];
        }
      } else {
        if (a >= 1 && a <= num_entries) ++uni[a];
        if (b >= 1 && b <= num_entries) ++uni[b];
      }
    }
  }
  if (per_class) per_class->assign(num_entries, 0.0);
  double sum = 0.0;
  int counted = 0;
  for (int k = 1; k <= num_entries; ++k) {
    const double iou_k = uni[k] ? static_cast<double>(inter[k]) / static_cast<double>(uni[k]) : 1.0;
    if (per_class) (*per_class)[k - 1] = iou_k;
    if (!present[k]) continue;
    sum += iou_k;
    ++counted;
  }
  return counted ? sum / counted : 1.0;
}

EvalReport evaluate(const Scene<float>& scene, const Dataset& dataset, const RasterConfig& cfg,
                    const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  if (scene.dictionary.size() != dataset.dictionary.size()) {
    throw Error(ErrorCode::kConfiguration, "scene and dataset dictionaries differ in size");
  }
  EvalReport report;
  report.name = name;
  report.frames = static_cast<int>(dataset.frames.size());
  report.num_gaussians = scene.gaussians.size();
  std::vector<LabelMap> pred, gt;
  std::vector<Image<float>> rel_maps;
  std::vector<Mask> gt_masks;
  const int n = scene.dictionary.size();
  for (const Frame& f : dataset.frames) {
    const RenderOutput<float> out = render(scene, f.camera, cfg);
    report.psnr += psnr(out.color, f.image);
    report.ssim += static_cast<double>(ssim(out.color, f.image));
    pred.push_back(pixel_label_map(out.feature, scene.head));
    gt.push_back(f.labels);
    if (scene.embeddings.empty()) continue;
    for (int k = 1; k <= n; ++k) {
      Mask m = label_mask(f.labels, k);
      bool any = false;
      for (auto v : m.data) any = any || v;
      if (!any) continue;
      rel_maps.push_back(relevancy_map(scene, scene.embeddings.entry(k), f.camera, cfg));
      gt_masks.push_back(std::move(m));
    }
  }
  if (report.frames > 0) {
    report.psnr /= report.frames;
    report.ssim /= report.frames;
  }
  std::vector<double> per_class;
  report.miou = label_miou(pred, gt, n, &per_class);
  for (int k = 1; k <= n; ++k) report.per_class.push_back({scene.dictionary.label_of(k), per_class[k - 1]});
  if (!rel_maps.empty()) {
    const LocalizationResult loc = localization_accuracy(rel_maps, gt_masks);
    report.localization_accuracy = loc.accuracy;
    report.localization_queries = loc.evaluated;
  }
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace semsplat
