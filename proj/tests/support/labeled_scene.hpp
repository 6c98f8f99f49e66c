#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "semsplat/scene.hpp"
#include "test_scenes.hpp"

namespace semsplat::test {

/// Three well separated opaque blobs along x, one per dictionary entry.
/// Entry k's blob has semantic code 5 * e_k and the head maps e_k to
/// logit k, so pixel labels and Gaussian classes are known exactly.
/// Embeddings are axis-aligned in 4 dims; the single negative is e_3.
template <typename Real>
Scene<Real> labeled_scene(const std::vector<std::string>& labels = {"kettle", "coffee machine",
                                                                      "apple"}) {
  Scene<Real> scene(0, SemanticDictionary(labels));
  const int n = static_cast<int>(labels.size());
  for (int k = 0; k < n; ++k) {
    GaussianRow<Real> row;
    row.mean = Vec3<Real>(static_cast<Real>(0.8 * (k - (n - 1) / 2.0)), 0, 0);
    row.log_scale = Vec3<Real>::Constant(static_cast<Real>(std::log(0.2)));
    row.opacity_logit = logit(Real(0.95));
    row.sh = {rgb_to_sh_dc(Real(0.2 * (k + 1))), rgb_to_sh_dc(Real(0.5)), rgb_to_sh_dc(Real(0.1))};
    row.semantic = Vec3<Real>::Zero();
    row.semantic[k % 3] = 5;
    scene.gaussians.push_back(row);
  }
  for (int k = 1; k <= n; ++k) {
    scene.head.weight[static_cast<std::size_t>(k) * kSemanticDim + (k - 1) % 3] = 4;
  }
  scene.head.bias[0] = 1;

  scene.embeddings.dim = 4;
  for (int k = 0; k < n; ++k) {
    std::vector<float> v(4, 0.0f);
    v[k % 3] = 1.0f;
    scene.embeddings.add_entry(v);
  }
  scene.embeddings.add_negative("object", std::vector<float>{0, 0, 0, 1});
  return scene;
}

inline Camera labeled_camera() { return front_camera(48, 32); }

}  // namespace semsplat::test
