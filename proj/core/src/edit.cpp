#include "semsplat/edit.hpp"

#include <algorithm>

#include "semsplat/error.hpp"
#include "semsplat/semantics.hpp"

namespace semsplat {

namespace {

template <typename Real>
void check_ids(const Scene<Real>& scene, std::span<const std::uint32_t> ids) {
  for (std::uint32_t id : ids) {
    if (id >= scene.gaussians.size()) {
      throw_invalid("gaussian id " + std::to_string(id) + " out of range (scene has " +
                    std::to_string(scene.gaussians.size()) + ")");
    }
  }
}

}  // namespace

template <typename Real>
std::vector<std::uint32_t> select_by_label(const Scene<Real>& scene, const std::string& label) {
  return gaussians_of_class(scene, scene.dictionary.lookup(label));
}

template <typename Real>
void recolor(Scene<Real>& scene, std::span<const std::uint32_t> ids, const Eigen::Vector3d& rgb) {
  check_ids(scene, ids);
  for (std::uint32_t id : ids) {
    auto coeffs = scene.gaussians.sh_of(id);
    std::fill(coeffs.begin(), coeffs.end(), Real(0));
    for (int c = 0; c < 3; ++c) coeffs[c] = rgb_to_sh_dc(static_cast<Real>(rgb[c]));
  }
}

template <typename Real>
void delete_gaussians(Scene<Real>& scene, std::span<const std::uint32_t> ids,
                      SceneOptimizer<Real>* optimizer) {
  check_ids(scene, ids);
  if (ids.empty()) return;
  std::vector<char> keep(scene.gaussians.size(), 1);
  for (std::uint32_t id : ids) keep[id] = 0;
  scene.gaussians.keep_rows(keep);
  if (optimizer) optimizer->keep_rows(keep);
}

template <typename Real>
void translate(Scene<Real>& scene, std::span<const std::uint32_t> ids,
               const Eigen::Vector3d& offset) {
  check_ids(scene, ids);
  const Vec3<Real> t = offset.cast<Real>();
  for (std::uint32_t id : ids) scene.gaussians.mean(id) += t;
}

template <typename Real>
std::vector<std::uint32_t> insert(Scene<Real>& scene, const Scene<Real>& sub,
                                  const Eigen::Vector3d& offset, SceneOptimizer<Real>* optimizer) {
  if (sub.sh_degree() != scene.sh_degree()) {
    throw_invalid("insert: sub-scene sh degree " + std::to_string(sub.sh_degree()) +
                  " differs from host degree " + std::to_string(scene.sh_degree()));
  }
  const bool copy_embeddings = !scene.embeddings.empty() && sub.embeddings.dim == scene.embeddings.dim &&
                               static_cast<int>(sub.embeddings.entry_count()) == sub.dictionary.size();
  for (int i = 1; i <= sub.dictionary.size(); ++i) {
    if (!scene.embeddings.empty() && !copy_embeddings &&
        !scene.dictionary.contains(sub.dictionary.label_of(i))) {
      throw_invalid("insert: new label '" + sub.dictionary.label_of(i) +
                    "' has no embedding compatible with the host table");
    }
  }
  for (int i = 1; i <= sub.dictionary.size(); ++i) {
    const std::string& label = sub.dictionary.label_of(i);
    if (scene.dictionary.contains(label)) continue;
    scene.dictionary.add(label);
    if (copy_embeddings) scene.embeddings.add_entry(sub.embeddings.entry(i));
  }
  scene.head.pad_to(scene.dictionary.num_classes());

  std::vector<std::uint32_t> inserted;
  const Vec3<Real> t = offset.cast<Real>();
  for (std::size_t i = 0; i < sub.gaussians.size(); ++i) {
    GaussianRow<Real> row = sub.gaussians.row(i);
    row.mean += t;
    inserted.push_back(static_cast<std::uint32_t>(scene.gaussians.size()));
    scene.gaussians.push_back(row);
  }
  if (optimizer) optimizer->append_rows(scene);
  return inserted;
}

#define SEMSPLAT_INSTANTIATE(Real)                                                               \
  template std::vector<std::uint32_t> select_by_label(const Scene<Real>&, const std::string&);   \
  template void recolor(Scene<Real>&, std::span<const std::uint32_t>, const Eigen::Vector3d&);   \
  template void delete_gaussians(Scene<Real>&, std::span<const std::uint32_t>,                   \
                                 SceneOptimizer<Real>*);                                         \
  template void translate(Scene<Real>&, std::span<const std::uint32_t>, const Eigen::Vector3d&); \
  template std::vector<std::uint32_t> insert(Scene<Real>&, const Scene<Real>&,                   \
                                             const Eigen::Vector3d&, SceneOptimizer<Real>*);
SEMSPLAT_INSTANTIATE(float)
SEMSPLAT_INSTANTIATE(double)
#undef SEMSPLAT_INSTANTIATE

}  // namespace semsplat
