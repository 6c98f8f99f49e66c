#include "semsplat/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "semsplat/error.hpp"

namespace semsplat {

namespace {

template <typename Real, typename LrFn>
void adam_update(std::span<Real> params, std::span<const Real> grads, AdamMoments<Real>& st,
                 const AdamHyper& h, LrFn lr_of) {
  if (params.size() != grads.size()) throw_invalid("adam: parameter/gradient size mismatch");
  st.resize(params.size());
  ++st.step;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(st.step));
  const Real b1 = Real(h.beta1), b2 = Real(h.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Real g = grads[i];
    st.m[i] = b1 * st.m[i] + (Real(1) - b1) * g;
    st.v[i] = b2 * st.v[i] + (Real(1) - b2) * g * g;
    const double m_hat = static_cast<double>(st.m[i]) / c1;
    const double v_hat = static_cast<double>(st.v[i]) / c2;
    params[i] -= static_cast<Real>(lr_of(i) * m_hat / (std::sqrt(v_hat) + h.eps));
  }
}

}  // namespace

template <typename Real>
void adam_step(std::span<Real> params, std::span<const Real> grads, AdamMoments<Real>& state,
               double lr, const AdamHyper& hyper) {
  adam_update(params, grads, state, hyper, [lr](std::size_t) { return lr; });
}

double LearningRates::means_at(int iteration) const {
  const double t = std::clamp(static_cast<double>(iteration) / std::max(1, means_decay_steps), 0.0, 1.0);
  return std::exp((1.0 - t) * std::log(means_init) + t * std::log(means_final));
}

void LearningRates::validate() const {
  for (double lr : {means_init, means_final, rotations, log_scales, opacity, sh_dc, sh_rest,
                    semantics, head}) {
    if (!(lr > 0.0)) throw Error(ErrorCode::kConfiguration, "learning rates must be positive");
  }
}

template <typename Real>
SceneOptimizer<Real>::SceneOptimizer(const Scene<Real>& scene, LearningRates lr,
                                     double spatial_scale, AdamHyper hyper)
    : lr_(lr), spatial_scale_(spatial_scale), hyper_(hyper) {
  lr_.validate();
  for (ParamGroup g : kParamGroups) strides_[static_cast<int>(g)] = scene.gaussians.stride(g);
  append_rows(scene);
  head_weight_.resize(scene.head.weight.size());
  head_bias_.resize(scene.head.bias.size());
}

template <typename Real>
void SceneOptimizer<Real>::append_rows(const Scene<Real>& scene) {
  rows_ = scene.gaussians.size();
  for (ParamGroup g : kParamGroups) {
    groups_[static_cast<int>(g)].resize(rows_ * strides_[static_cast<int>(g)]);
  }
  head_weight_.resize(scene.head.weight.size());
  head_bias_.resize(scene.head.bias.size());
}

template <typename Real>
void SceneOptimizer<Real>::keep_rows(std::span<const char> keep) {
  if (keep.size() != rows_) throw_invalid("optimizer keep_rows: mask length mismatch");
  std::size_t kept = 0;
  for (int gi = 0; gi < 6; ++gi) {
    const std::size_t s = strides_[gi];
    auto& st = groups_[gi];
    std::size_t out = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (!keep[i]) continue;
      for (std::size_t k = 0; k < s; ++k) {
        st.m[out * s + k] = st.m[i * s + k];
        st.v[out * s + k] = st.v[i * s + k];
      }
      ++out;
    }
    st.m.resize(out * s);
    st.v.resize(out * s);
    kept = out;
  }
  rows_ = kept;
}

template <typename Real>
void SceneOptimizer<Real>::reset_group(ParamGroup group) {
  auto& st = groups_[static_cast<int>(group)];
  std::fill(st.m.begin(), st.m.end(), Real(0));
  std::fill(st.v.begin(), st.v.end(), Real(0));
}

template <typename Real>
void SceneOptimizer<Real>::step(Scene<Real>& scene, const GradientBuffer<Real>& grads,
                                int iteration) {
  if (scene.gaussians.size() != rows_) {
    throw_invalid("optimizer state rows do not match the scene; call append_rows/keep_rows");
  }
  auto run = [&](ParamGroup g, auto lr_of) {
    adam_update(std::span<Real>(scene.gaussians.group(g)),
                std::span<const Real>(grads.gaussians.group(g)), groups_[static_cast<int>(g)],
                hyper_, lr_of);
  };
  const double means_lr = lr_.means_at(iteration) * spatial_scale_;
  run(ParamGroup::kMeans, [&](std::size_t) { return means_lr; });
  run(ParamGroup::kRotations, [&](std::size_t) { return lr_.rotations; });
  run(ParamGroup::kLogScales, [&](std::size_t) { return lr_.log_scales; });
  run(ParamGroup::kOpacity, [&](std::size_t) { return lr_.opacity; });
  const std::size_t sh_stride = strides_[static_cast<int>(ParamGroup::kSh)];
  run(ParamGroup::kSh, [&](std::size_t i) { return i % sh_stride < 3 ? lr_.sh_dc : lr_.sh_rest; });
  run(ParamGroup::kSemantics, [&](std::size_t) { return lr_.semantics; });
  adam_update(std::span<Real>(scene.head.weight), std::span<const Real>(grads.head.weight),
              head_weight_, hyper_, [&](std::size_t) { return lr_.head; });
  adam_update(std::span<Real>(scene.head.bias), std::span<const Real>(grads.head.bias),
              head_bias_, hyper_, [&](std::size_t) { return lr_.head; });
  normalize_rotations(scene.gaussians);
}

template <typename Real>
void normalize_rotations(GaussianSoA<Real>& gaussians) {
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    auto q = gaussians.rotation(i);
    const Real n = q.norm();
    if (n > Real(0) && std::isfinite(n)) {
      q /= n;
    } else {
      q = Vec4<Real>(1, 0, 0, 0);
    }
  }
}

template void adam_step(std::span<float>, std::span<const float>, AdamMoments<float>&, double,
                        const AdamHyper&);
template void adam_step(std::span<double>, std::span<const double>, AdamMoments<double>&, double,
                        const AdamHyper&);
template class SceneOptimizer<float>;
template class SceneOptimizer<double>;
template void normalize_rotations(GaussianSoA<float>&);
template void normalize_rotations(GaussianSoA<double>&);

}  // namespace semsplat
