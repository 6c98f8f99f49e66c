#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semsplat/camera.hpp"
#include "semsplat/dictionary.hpp"
#include "semsplat/image.hpp"

namespace semsplat {

struct Frame {
  std::string name;
  Camera camera;
  Image<float> image;  // H x W x 3 in [0, 1]
  LabelMap labels;     // H x W, values in [0, N]
};

/// Posed training views with per-pixel class labels, the label dictionary
/// and the text embeddings of its entries.
struct Dataset {
  std::vector<Frame> frames;
  SemanticDictionary dictionary;
  EmbeddingTable embeddings;
  /// Optional sparse point cloud used to seed the Gaussians.
  std::vector<Eigen::Vector3f> points;
  std::vector<Eigen::Vector3f> point_colors;
  std::array<float, 3> background{0.0f, 0.0f, 0.0f};

  /// Throws configuration errors for inconsistent frames or labels.
  void validate() const;
};

}  // namespace semsplat
