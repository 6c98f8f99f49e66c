#include "semsplat/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "semsplat/error.hpp"
#include "semsplat/metrics.hpp"

namespace semsplat {

void TrainConfig::validate() const {
  if (iterations <= 0) throw Error(ErrorCode::kConfiguration, "iterations must be positive");
  if (sh_degree < 0 || sh_degree > kMaxShDegree) {
    throw Error(ErrorCode::kConfiguration, "sh_degree must be in [0, 3]");
  }
  if (sh_warmup_interval <= 0) {
    throw Error(ErrorCode::kConfiguration, "sh_warmup_interval must be positive");
  }
  if (densify.interval <= 0) throw Error(ErrorCode::kConfiguration, "densify interval must be positive");
  if (init_random_points <= 0) {
    throw Error(ErrorCode::kConfiguration, "init_random_points must be positive");
  }
  if (!(init_opacity > 0.0 && init_opacity < 1.0)) {
    throw Error(ErrorCode::kConfiguration, "init_opacity must be in (0, 1)");
  }
  lr.validate();
}

std::string IterationMetrics::to_json() const {
  nlohmann::json j;
  j["iteration"] = iteration;
  j["L_gs"] = l_gs;
  j["L_ce"] = l_ce;
  j["psnr"] = psnr;
  j["num_gaussians"] = num_gaussians;
  j["wall_ms"] = wall_ms;
  return j.dump();
}

bool IterationMetrics::same_values(const IterationMetrics& o) const {
  return iteration == o.iteration && l_gs == o.l_gs && l_ce == o.l_ce && psnr == o.psnr &&
         num_gaussians == o.num_gaussians;
}

template <typename Real>
StepLoss<Real> loss_and_gradients(const Scene<Real>& scene, const Camera& camera,
                                  const Image<Real>& target, const LabelMap* labels,
                                  const LossConfig& loss_cfg, const RasterConfig& raster_cfg,
                                  GradientBuffer<Real>& grads) {
  RasterState<Real> state;
  const RenderOutput<Real> out = render(scene, camera, raster_cfg, &state);
  const PhotometricLoss<Real> photo = loss_photometric(out.color, target, loss_cfg);

  StepLoss<Real> result;
  result.l_gs = photo.loss;
  result.psnr = psnr(out.color, target);
  const Image<Real>* d_feature = nullptr;
  SemanticLoss<Real> sem;
  if (labels && loss_cfg.semantic_weight != 0.0) {
    sem = loss_semantic(out.feature, scene.head, *labels, loss_cfg);
    result.l_ce = sem.loss;
    const Real w = static_cast<Real>(loss_cfg.semantic_weight);
    for (auto& v : sem.d_feature.data) v *= w;
    for (std::size_t k = 0; k < sem.d_head.weight.size(); ++k) {
      grads.head.weight[k] += w * sem.d_head.weight[k];
    }
    for (std::size_t k = 0; k < sem.d_head.bias.size(); ++k) {
      grads.head.bias[k] += w * sem.d_head.bias[k];
    }
    d_feature = &sem.d_feature;
  }
  result.total = result.l_gs + static_cast<Real>(loss_cfg.semantic_weight) * result.l_ce;
  backward_render(scene, camera, &photo.d_rendered, d_feature, grads, raster_cfg, &state);
  return result;
}

SceneBounds camera_bounds(const std::vector<Frame>& frames) {
  SceneBounds b;
  if (frames.empty()) return b;
  for (const Frame& f : frames) b.center += f.camera.center();
  b.center /= static_cast<double>(frames.size());
  double max_dist = 0.0;
  for (const Frame& f : frames) max_dist = std::max(max_dist, (f.camera.center() - b.center).norm());
  b.extent = max_dist > 0.0 ? 1.1 * max_dist : 1.0;
  return b;
}

namespace {

// Least-squares point closest to every optical axis; falls back to the mean
// camera center when the axes are (nearly) parallel.
Eigen::Vector3d common_focus(const std::vector<Frame>& frames, const Eigen::Vector3d& fallback) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const Frame& f : frames) {
    const Eigen::Vector3d dir = f.camera.rotation().transpose() * Eigen::Vector3d::UnitZ();
    const Eigen::Matrix3d p = Eigen::Matrix3d::Identity() - dir * dir.transpose();
    a += p;
    rhs += p * f.camera.center();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
  const Eigen::Vector3d ev = eig.eigenvalues();
  if (ev[0] < 1e-6 * std::max(1.0, ev[2])) return fallback;
  return a.ldlt().solve(rhs);
}

std::vector<float> knn_mean_sq_dist(const std::vector<Eigen::Vector3f>& pts, int k) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(pts.size());
  std::vector<float> out(pts.size(), 1e-4f);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::vector<float> best(k, std::numeric_limits<float>::max());
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const float d = (pts[i] - pts[j]).squaredNorm();
      if (d < best.back()) {
        best.back() = d;
        std::sort(best.begin(), best.end());
      }
    }
    double sum = 0.0;
    int used = 0;
    for (float d : best) {
      if (d == std::numeric_limits<float>::max()) continue;
      sum += d;
      ++used;
    }
    if (used > 0) out[i] = std::max(1e-7f, static_cast<float>(sum / used));
  }
  return out;
}

}  // namespace

Scene<float> initialize_scene(const Dataset& dataset, const TrainConfig& cfg, std::mt19937_64& rng) {
  Scene<float> scene(cfg.sh_degree, dataset.dictionary);
  scene.embeddings = dataset.embeddings;
  scene.background = dataset.background;

  std::vector<Eigen::Vector3f> pts = dataset.points;
  std::vector<Eigen::Vector3f> cols = dataset.point_colors;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (pts.empty()) {
    const SceneBounds b = camera_bounds(dataset.frames);
    const Eigen::Vector3d focus = common_focus(dataset.frames, b.center);
    double radius = 0.0;
    for (const Frame& f : dataset.frames) radius += (f.camera.center() - focus).norm();
    radius = 0.5 * radius / static_cast<double>(dataset.frames.size());
    for (int i = 0; i < cfg.init_random_points; ++i) {
      Eigen::Vector3d p;
      do {
        p = Eigen::Vector3d(uni(rng), uni(rng), uni(rng)) * 2.0 - Eigen::Vector3d::Ones();
      } while (p.squaredNorm() > 1.0);
      pts.push_back((focus + radius * p).cast<float>());
      cols.emplace_back(uni(rng), uni(rng), uni(rng));
    }
  }

  const std::vector<float> sq = knn_mean_sq_dist(pts, 3);
  const float op_logit = logit(static_cast<float>(cfg.init_opacity));
  GaussianRow<float> row;
  row.sh.assign(3 * static_cast<std::size_t>(sh_basis_count(cfg.sh_degree)), 0.0f);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    row.mean = pts[i];
    row.rotation = Vec4<float>(1, 0, 0, 0);
    row.log_scale = Vec3<float>::Constant(0.5f * std::log(sq[i]));
    row.opacity_logit = op_logit;
    for (int c = 0; c < 3; ++c) row.sh[c] = rgb_to_sh_dc(std::clamp(cols[i][c], 0.0f, 1.0f));
    for (int c = 0; c < 3; ++c) {
      row.semantic[c] = static_cast<float>(cfg.init_semantic_std * normal(rng));
    }
    scene.gaussians.push_back(row);
  }
  for (auto& w : scene.head.weight) w = static_cast<float>(cfg.init_head_std * normal(rng));
  return scene;
}

Trainer::Trainer(const Dataset& dataset, TrainConfig cfg, LossConfig loss_cfg)
    : dataset_(dataset), cfg_(std::move(cfg)), loss_cfg_(loss_cfg), rng_(cfg_.seed) {
  cfg_.validate();
  loss_cfg_.validate();
  dataset_.validate();
  scene_ = initialize_scene(dataset_, cfg_, rng_);
  setup();
}

Trainer::Trainer(const Dataset& dataset, Scene<float> scene, TrainConfig cfg, LossConfig loss_cfg)
    : dataset_(dataset), cfg_(std::move(cfg)), loss_cfg_(loss_cfg), rng_(cfg_.seed),
      scene_(std::move(scene)) {
  cfg_.validate();
  loss_cfg_.validate();
  dataset_.validate();
  // Same labels in the same order; a permutation would silently relabel every pixel.
  if (!(scene_.dictionary == dataset_.dictionary)) {
    throw Error(ErrorCode::kConfiguration,
                "scene dictionary (" + std::to_string(scene_.dictionary.size()) +
                    " entries) does not match the dataset dictionary (" +
                    std::to_string(dataset_.dictionary.size()) + " entries)");
  }
  if (cfg_.sh_degree > scene_.sh_degree()) cfg_.sh_degree = scene_.sh_degree();
  setup();
}

void Trainer::setup() {
  scene_.validate();
  if (scene_.head.num_classes() != dataset_.dictionary.num_classes()) {
    throw Error(ErrorCode::kConfiguration, "semantic head size does not match the dictionary");
  }
  bounds_ = camera_bounds(dataset_.frames);
  if (cfg_.lr.means_decay_steps <= 0) cfg_.lr.means_decay_steps = cfg_.iterations;
  optimizer_ = SceneOptimizer<float>(scene_, cfg_.lr, bounds_.extent);
  stats_.resize(scene_.gaussians.size());
  order_.resize(dataset_.frames.size());
  order_pos_ = order_.size();
}

std::size_t Trainer::next_frame() {
  if (order_pos_ >= order_.size()) {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    std::shuffle(order_.begin(), order_.end(), rng_);
    order_pos_ = 0;
  }
  return order_[order_pos_++];
}

IterationMetrics Trainer::step() {
  const auto t0 = std::chrono::steady_clock::now();
  ++iteration_;
  const Frame& frame = dataset_.frames[next_frame()];

  RasterConfig raster = cfg_.raster;
  raster.sh_degree = std::min(scene_.sh_degree(),
                              std::min(cfg_.sh_degree, (iteration_ - 1) / cfg_.sh_warmup_interval));

  grads_.reset(scene_);
  const StepLoss<float> loss = loss_and_gradients(scene_, frame.camera, frame.image, &frame.labels,
                                                  loss_cfg_, raster, grads_);
  const DensifyConfig& dc = cfg_.densify;
  const bool densifying = dc.enabled && iteration_ < dc.stop_iteration;
  if (densifying) stats_.accumulate(grads_);

  optimizer_.step(scene_, grads_, iteration_);

  if (densifying && iteration_ > dc.start_iteration && iteration_ % dc.interval == 0) {
    densify_and_prune(scene_, optimizer_, stats_, dc, bounds_.extent, rng_);
  }
  if (dc.enabled && dc.opacity_reset_interval > 0 && iteration_ < dc.stop_iteration &&
      iteration_ % dc.opacity_reset_interval == 0) {
    reset_opacity(scene_, optimizer_, dc.opacity_reset_value);
  }

  IterationMetrics m;
  m.iteration = iteration_;
  m.l_gs = loss.l_gs;
  m.l_ce = loss.l_ce;
  m.psnr = loss.psnr;
  m.num_gaussians = scene_.gaussians.size();
  m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  log_.push_back(m);
  return m;
}

void Trainer::run(const std::function<void(const IterationMetrics&)>& on_log) {
  while (iteration_ < cfg_.iterations) {
    const IterationMetrics m = step();
    if (on_log) on_log(m);
  }
}

Scene<float> train(const Dataset& dataset, const TrainConfig& cfg, const LossConfig& loss_cfg,
                   std::vector<IterationMetrics>* log) {
  Trainer trainer(dataset, cfg, loss_cfg);
  trainer.run();
  if (log) *log = trainer.log();
  return std::move(trainer.scene());
}

template StepLoss<float> loss_and_gradients(const Scene<float>&, const Camera&, const Image<float>&,
                                            const LabelMap*, const LossConfig&, const RasterConfig&,
                                            GradientBuffer<float>&);
template StepLoss<double> loss_and_gradients(const Scene<double>&, const Camera&,
                                             const Image<double>&, const LabelMap*,
                                             const LossConfig&, const RasterConfig&,
                                             GradientBuffer<double>&);

}  // namespace semsplat
