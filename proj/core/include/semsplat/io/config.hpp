#pragma once

#include <string>

#include "semsplat/losses.hpp"
#include "semsplat/trainer.hpp"

namespace semsplat::io {

struct RunConfig {
  TrainConfig train;
  LossConfig loss;
};

/// JSON config with optional sections "train", "lr", "densify", "raster"
/// and "loss". Absent keys keep their defaults; unknown keys are rejected.
RunConfig parse_config(const std::string& text, const std::string& file = "<config>");
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

}  // namespace semsplat::io
