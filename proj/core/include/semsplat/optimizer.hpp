#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "semsplat/backward.hpp"
#include "semsplat/scene.hpp"

namespace semsplat {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

template <typename Real>
struct AdamMoments {
  std::vector<Real> m;
  std::vector<Real> v;
  std::int64_t step = 0;

  void resize(std::size_t n) {
    m.resize(n, Real(0));
    v.resize(n, Real(0));
  }
};

/// One textbook Adam update with bias correction.
template <typename Real>
void adam_step(std::span<Real> params, std::span<const Real> grads, AdamMoments<Real>& state,
               double lr, const AdamHyper& hyper = {});

/// Per-group learning rates; the position rate decays exponentially from
/// means_init to means_final over `means_decay_steps` and is multiplied by
/// the scene extent.
struct LearningRates {
  double means_init = 1.6e-4;
  double means_final = 1.6e-6;
  int means_decay_steps = 30000;
  double rotations = 1e-3;
  double log_scales = 5e-3;
  double opacity = 5e-2;
  double sh_dc = 2.5e-3;
  double sh_rest = 2.5e-3 / 20.0;
  double semantics = 2.5e-3;
  double head = 2.5e-3;

  double means_at(int iteration) const;
  void validate() const;
};

/// Adam state for every parameter group of a Scene, kept row-aligned with
/// the Gaussians through densification and edits.
template <typename Real>
class SceneOptimizer {
 public:
  SceneOptimizer() = default;
  SceneOptimizer(const Scene<Real>& scene, LearningRates lr, double spatial_scale = 1.0,
                 AdamHyper hyper = {});

  /// Applies one Adam step to every group and renormalizes quaternions.
  void step(Scene<Real>& scene, const GradientBuffer<Real>& grads, int iteration);

  /// Zero-initialized state for rows appended to the scene since the last sync.
  void append_rows(const Scene<Real>& scene);
  void keep_rows(std::span<const char> keep);
  void reset_group(ParamGroup group);

  const AdamMoments<Real>& moments(ParamGroup group) const {
    return groups_[static_cast<int>(group)];
  }
  std::size_t rows() const { return rows_; }
  const LearningRates& learning_rates() const { return lr_; }

 private:
  std::array<AdamMoments<Real>, 6> groups_;
  std::array<std::size_t, 6> strides_{};
  AdamMoments<Real> head_weight_;
  AdamMoments<Real> head_bias_;
  std::size_t rows_ = 0;
  LearningRates lr_;
  double spatial_scale_ = 1.0;
  AdamHyper hyper_;
};

/// Rescales every quaternion to unit norm.
template <typename Real>
void normalize_rotations(GaussianSoA<Real>& gaussians);

}  // namespace semsplat
