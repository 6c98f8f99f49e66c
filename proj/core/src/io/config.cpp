#include "semsplat/io/config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "io/binary.hpp"

namespace semsplat::io {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& root, const char* name, const std::string& file) : file_(file), name_(name) {
    auto it = root.find(name);
    if (it == root.end()) return;
    if (!it->is_object()) throw FormatError(ErrorCode::kParse, file, name, "expected an object");
    j_ = &*it;
  }

  template <typename T>
  Section& opt(const char* key, T& out) {
    seen_.insert(key);
    if (!j_) return *this;
    auto it = j_->find(key);
    if (it == j_->end()) return *this;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw FormatError(ErrorCode::kParse, file_, name_ + "." + key, e.what());
    }
    return *this;
  }

  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!seen_.count(it.key())) {
        throw FormatError(ErrorCode::kParse, file_, name_ + "." + it.key(), "unknown key");
      }
    }
  }

 private:
  const json* j_ = nullptr;
  std::string file_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& file) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(ErrorCode::kParse, file, "offset " + std::to_string(e.byte), e.what());
  }
  if (!root.is_object()) throw FormatError(ErrorCode::kParse, file, "root", "expected an object");
  for (auto it = root.begin(); it != root.end(); ++it) {
    static const std::set<std::string> known = {"train", "lr", "densify", "raster", "loss"};
    if (!known.count(it.key())) throw FormatError(ErrorCode::kParse, file, it.key(), "unknown section");
  }

  RunConfig cfg;
  TrainConfig& t = cfg.train;
  Section train(root, "train", file);
  train.opt("iterations", t.iterations)
      .opt("seed", t.seed)
      .opt("sh_degree", t.sh_degree)
      .opt("sh_warmup_interval", t.sh_warmup_interval)
      .opt("init_random_points", t.init_random_points)
      .opt("init_opacity", t.init_opacity)
      .opt("init_semantic_std", t.init_semantic_std)
      .opt("init_head_std", t.init_head_std)
      .finish();

  LearningRates& lr = t.lr;
  Section lrs(root, "lr", file);
  lrs.opt("means_init", lr.means_init)
      .opt("means_final", lr.means_final)
      .opt("means_decay_steps", lr.means_decay_steps)
      .opt("rotations", lr.rotations)
      .opt("log_scales", lr.log_scales)
      .opt("opacity", lr.opacity)
      .opt("sh_dc", lr.sh_dc)
      .opt("sh_rest", lr.sh_rest)
      .opt("semantics", lr.semantics)
      .opt("head", lr.head)
      .finish();

  DensifyConfig& d = t.densify;
  Section dens(root, "densify", file);
  dens.opt("enabled", d.enabled)
      .opt("start_iteration", d.start_iteration)
      .opt("stop_iteration", d.stop_iteration)
      .opt("interval", d.interval)
      .opt("grad_threshold", d.grad_threshold)
      .opt("percent_dense", d.percent_dense)
      .opt("min_opacity", d.min_opacity)
      .opt("opacity_reset_interval", d.opacity_reset_interval)
      .opt("opacity_reset_value", d.opacity_reset_value)
      .opt("split_count", d.split_count)
      .opt("split_scale_divisor", d.split_scale_divisor)
      .opt("max_world_scale", d.max_world_scale)
      .finish();

  RasterConfig& r = t.raster;
  Section ras(root, "raster", file);
  ras.opt("tile_size", r.tile_size)
      .opt("min_alpha", r.min_alpha)
      .opt("min_transmittance", r.min_transmittance)
      .opt("blur", r.blur)
      .opt("min_radius", r.min_radius)
      .finish();

  LossConfig& l = cfg.loss;
  Section loss(root, "loss", file);
  loss.opt("lambda_dssim", l.lambda_dssim)
      .opt("gamma_labeled", l.gamma_labeled)
      .opt("gamma_undetected", l.gamma_undetected)
      .opt("semantic_weight", l.semantic_weight)
      .finish();

  try {
    t.validate();
    l.validate();
  } catch (const Error& e) {
    throw FormatError(ErrorCode::kConfiguration, file, "values", e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  return parse_config(std::string(bytes.begin(), bytes.end()), path);
}

std::string config_to_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  const LearningRates& lr = t.lr;
  const DensifyConfig& d = t.densify;
  const RasterConfig& r = t.raster;
  const LossConfig& l = cfg.loss;
  json j;
  j["train"] = {{"iterations", t.iterations},
                {"seed", t.seed},
                {"sh_degree", t.sh_degree},
                {"sh_warmup_interval", t.sh_warmup_interval},
                {"init_random_points", t.init_random_points},
                {"init_opacity", t.init_opacity},
                {"init_semantic_std", t.init_semantic_std},
                {"init_head_std", t.init_head_std}};
  j["lr"] = {{"means_init", lr.means_init},   {"means_final", lr.means_final},
             {"means_decay_steps", lr.means_decay_steps},
             {"rotations", lr.rotations},     {"log_scales", lr.log_scales},
             {"opacity", lr.opacity},         {"sh_dc", lr.sh_dc},
             {"sh_rest", lr.sh_rest},         {"semantics", lr.semantics},
             {"head", lr.head}};
  j["densify"] = {{"enabled", d.enabled},
                  {"start_iteration", d.start_iteration},
                  {"stop_iteration", d.stop_iteration},
                  {"interval", d.interval},
                  {"grad_threshold", d.grad_threshold},
                  {"percent_dense", d.percent_dense},
                  {"min_opacity", d.min_opacity},
                  {"opacity_reset_interval", d.opacity_reset_interval},
                  {"opacity_reset_value", d.opacity_reset_value},
                  {"split_count", d.split_count},
                  {"split_scale_divisor", d.split_scale_divisor},
                  {"max_world_scale", d.max_world_scale}};
  j["raster"] = {{"tile_size", r.tile_size},
                 {"min_alpha", r.min_alpha},
                 {"min_transmittance", r.min_transmittance},
                 {"blur", r.blur},
                 {"min_radius", r.min_radius}};
  j["loss"] = {{"lambda_dssim", l.lambda_dssim},
               {"gamma_labeled", l.gamma_labeled},
               {"gamma_undetected", l.gamma_undetected},
               {"semantic_weight", l.semantic_weight}};
  return j.dump(2);
}

}  // namespace semsplat::io
