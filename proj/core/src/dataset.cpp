#include "semsplat/dataset.hpp"

#include "semsplat/error.hpp"

namespace semsplat {

void Dataset::validate() const {
  if (frames.empty()) throw Error(ErrorCode::kConfiguration, "dataset has no frames");
  if (dictionary.size() < 1) throw Error(ErrorCode::kConfiguration, "dictionary is empty");
  embeddings.validate(dictionary.size());
  if (points.size() != point_colors.size()) {
    throw Error(ErrorCode::kConfiguration, "point cloud colors do not match point count");
  }
  for (const Frame& f : frames) {
    f.camera.validate();
    if (f.image.width != f.camera.width || f.image.height != f.camera.height ||
        f.image.channels != 3) {
      throw Error(ErrorCode::kConfiguration, "frame '" + f.name + "': image shape mismatch");
    }
    if (f.labels.width != f.camera.width || f.labels.height != f.camera.height ||
        f.labels.channels != 1) {
      throw Error(ErrorCode::kConfiguration, "frame '" + f.name + "': label map shape mismatch");
    }
    for (auto v : f.labels.data) {
      if (v > dictionary.size()) {
        throw Error(ErrorCode::kLabelOutOfRange,
                    "frame '" + f.name + "': label " + std::to_string(v) + " exceeds N = " +
                        std::to_string(dictionary.size()));
      }
    }
  }
}

}  // namespace semsplat
