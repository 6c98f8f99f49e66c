#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semsplat/optimizer.hpp"
#include "semsplat/scene.hpp"

namespace semsplat {

/// Gaussians whose semantic code maps to `label`. Throws invalid-parameter
/// for labels missing from the dictionary.
template <typename Real>
std::vector<std::uint32_t> select_by_label(const Scene<Real>& scene, const std::string& label);

/// Sets the selected Gaussians to a flat color: DC band encodes `rgb`,
/// higher bands are zeroed.
template <typename Real>
void recolor(Scene<Real>& scene, std::span<const std::uint32_t> ids, const Eigen::Vector3d& rgb);

/// Removes the selected rows; `optimizer`, when given, is compacted alongside.
template <typename Real>
void delete_gaussians(Scene<Real>& scene, std::span<const std::uint32_t> ids,
                      SceneOptimizer<Real>* optimizer = nullptr);

template <typename Real>
void translate(Scene<Real>& scene, std::span<const std::uint32_t> ids,
               const Eigen::Vector3d& offset);

/// Appends every Gaussian of `sub` shifted by `offset`. Dictionaries are
/// unioned (equal labels share one index), semantic codes are kept, the
/// host head gains zero rows for new labels, and embedding rows of new
/// labels are copied from `sub` when both tables share a dimension.
/// Returns the ids of the inserted rows.
template <typename Real>
std::vector<std::uint32_t> insert(Scene<Real>& scene, const Scene<Real>& sub,
                                  const Eigen::Vector3d& offset,
                                  SceneOptimizer<Real>* optimizer = nullptr);

}  // namespace semsplat
