#include "semsplat/backward.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "semsplat/error.hpp"

namespace semsplat {

template <typename Real>
void GradientBuffer<Real>::reset(const Scene<Real>& scene) {
  gaussians = GaussianSoA<Real>(scene.sh_degree());
  for (ParamGroup g : kParamGroups) {
    gaussians.group(g).assign(scene.gaussians.group(g).size(), Real(0));
  }
  head.weight.assign(scene.head.weight.size(), Real(0));
  head.bias.assign(scene.head.bias.size(), Real(0));
  viewspace_grad.assign(scene.gaussians.size(), Real(0));
  visible.assign(scene.gaussians.size(), 0);
}

template <typename Real>
bool GradientBuffer<Real>::all_zero() const {
  auto zero = [](const std::vector<Real>& v) {
    return std::all_of(v.begin(), v.end(), [](Real x) { return x == Real(0); });
  };
  for (ParamGroup g : kParamGroups) {
    if (!zero(gaussians.group(g))) return false;
  }
  return zero(head.weight) && zero(head.bias);
}

namespace {

template <typename Real>
struct ScreenGrad {
  std::array<Real, 2> mean{};
  std::array<Real, 3> conic{};
  Real opacity = 0;
  std::array<Real, 3> color{};
  std::array<Real, 3> feature{};

  ScreenGrad& operator+=(const ScreenGrad& o) {
    for (int i = 0; i < 2; ++i) mean[i] += o.mean[i];
    for (int i = 0; i < 3; ++i) {
      conic[i] += o.conic[i];
      color[i] += o.color[i];
      feature[i] += o.feature[i];
    }
    opacity += o.opacity;
    return *this;
  }
};

template <typename Real>
struct Contribution {
  std::uint32_t entry;
  Real alpha;
  Real transmittance;
};

// d R(q_hat) / d q_hat contracted with dL/dR.
template <typename Real>
Vec4<Real> quaternion_grad(const Vec4<Real>& q_raw, const Mat3<Real>& dr) {
  const Real len = q_raw.norm();
  const Vec4<Real> q = q_raw / len;
  const Real w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4<Real> g;
  g[0] = 2 * (-z * dr(0, 1) + y * dr(0, 2) + z * dr(1, 0) - x * dr(1, 2) - y * dr(2, 0) +
              x * dr(2, 1));
  g[1] = 2 * (y * dr(0, 1) + z * dr(0, 2) + y * dr(1, 0) - 2 * x * dr(1, 1) - w * dr(1, 2) +
              z * dr(2, 0) + w * dr(2, 1) - 2 * x * dr(2, 2));
  g[2] = 2 * (-2 * y * dr(0, 0) + x * dr(0, 1) + w * dr(0, 2) + x * dr(1, 0) + z * dr(1, 2) -
              w * dr(2, 0) + z * dr(2, 1) - 2 * y * dr(2, 2));
  g[3] = 2 * (-2 * z * dr(0, 0) - w * dr(0, 1) + x * dr(0, 2) + w * dr(1, 0) -
              2 * z * dr(1, 1) + y * dr(1, 2) + x * dr(2, 0) + y * dr(2, 1));
  // Through the normalization q_hat = q / |q|.
  return (g - q * q.dot(g)) / len;
}

}  // namespace

template <typename Real>
void backward_render(const Scene<Real>& scene, const Camera& camera, const Image<Real>* d_color,
                     const Image<Real>* d_feature, GradientBuffer<Real>& grads,
                     const RasterConfig& cfg, const RasterState<Real>* state) {
  if (grads.gaussians.size() != scene.gaussians.size() ||
      grads.gaussians.sh_degree() != scene.sh_degree()) {
    grads.reset(scene);
  }
  auto check_shape = [&](const Image<Real>* img, const char* what) {
    if (img && (img->width != camera.width || img->height != camera.height || img->channels != 3)) {
      throw_invalid(std::string("backward_render: ") + what + " gradient has the wrong shape");
    }
  };
  check_shape(d_color, "color");
  check_shape(d_feature, "feature");

  RasterState<Real> local;
  if (!state) {
    local = prepare_frame(scene, camera, cfg);
    state = &local;
  }
  const RasterState<Real>& st = *state;
  const int tile_size = st.tile_size;
  const Real min_alpha = Real(cfg.min_alpha);
  const Real min_t = Real(cfg.min_transmittance);
  const int tiles = st.tiles_x * st.tiles_y;
  std::vector<ScreenGrad<Real>> instance(st.tile_entries.size());
  const Vec3<Real> background(scene.background[0], scene.background[1], scene.background[2]);

#pragma omp parallel for schedule(dynamic)
  for (int tile = 0; tile < tiles; ++tile) {
    const int tx = tile % st.tiles_x;
    const int ty = tile / st.tiles_x;
    const std::uint32_t begin = st.tile_offsets[tile];
    const std::uint32_t end = st.tile_offsets[tile + 1];
    if (begin == end) continue;
    const int x_end = std::min(camera.width, (tx + 1) * tile_size);
    const int y_end = std::min(camera.height, (ty + 1) * tile_size);
    std::vector<Contribution<Real>> contribs;
    for (int y = ty * tile_size; y < y_end; ++y) {
      for (int x = tx * tile_size; x < x_end; ++x) {
        Vec3<Real> dc = Vec3<Real>::Zero();
        Vec3<Real> df = Vec3<Real>::Zero();
        for (int c = 0; c < 3; ++c) {
          if (d_color) dc[c] = d_color->at(x, y, c);
          if (d_feature) df[c] = d_feature->at(x, y, c);
        }
        if (dc.isZero(0) && df.isZero(0)) continue;
        const Real px = Real(x) + Real(0.5);
        const Real py = Real(y) + Real(0.5);

        // Replay the forward pass to recover each contributor's transmittance.
        contribs.clear();
        Real t = 1;
        for (std::uint32_t e = begin; e < end; ++e) {
          const Real a = st.projected[st.tile_entries[e]].alpha_at(px, py);
          if (a < min_alpha || a <= Real(0)) continue;
          contribs.push_back({e, a, t});
          t *= Real(1) - a;
          if (t < min_t) break;
        }

        Vec3<Real> behind_color = background;
        Vec3<Real> behind_feature = Vec3<Real>::Zero();
        for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
          const auto& p = st.projected[st.tile_entries[it->entry]];
          ScreenGrad<Real>& g = instance[it->entry];
          const Real a = it->alpha;
          const Real weight = a * it->transmittance;
          for (int c = 0; c < 3; ++c) {
            g.color[c] += weight * dc[c];
            g.feature[c] += weight * df[c];
          }
          const Real d_alpha = it->transmittance * (dc.dot(p.color - behind_color) +
                                                    df.dot(p.feature - behind_feature));
          behind_color = a * p.color + (Real(1) - a) * behind_color;
          behind_feature = a * p.feature + (Real(1) - a) * behind_feature;

          g.opacity += d_alpha * (a / p.opacity);
          const Real d_power = d_alpha * a;
          const Real dx = px - p.mean2d[0];
          const Real dy = py - p.mean2d[1];
          g.conic[0] += d_power * Real(-0.5) * dx * dx;
          g.conic[1] += d_power * -dx * dy;
          g.conic[2] += d_power * Real(-0.5) * dy * dy;
          g.mean[0] += d_power * (p.conic[0] * dx + p.conic[1] * dy);
          g.mean[1] += d_power * (p.conic[1] * dx + p.conic[2] * dy);
        }
      }
    }
  }

  // Deterministic reduction in tile order.
  std::vector<ScreenGrad<Real>> screen(st.projected.size());
  for (std::size_t e = 0; e < st.tile_entries.size(); ++e) screen[st.tile_entries[e]] += instance[e];

  const int degree = cfg.sh_degree < 0 ? scene.sh_degree() : cfg.sh_degree;
  const Mat3<Real> w = camera.rotation().cast<Real>();
  const Vec3<Real> cam_center = camera.center().cast<Real>();
  const Real fx = Real(camera.fx), fy = Real(camera.fy);
  const GaussianSoA<Real>& gs = scene.gaussians;
  GaussianSoA<Real>& out = grads.gaussians;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(st.projected.size()); ++k) {
    const auto& p = st.projected[k];
    const ScreenGrad<Real>& g = screen[k];
    const std::size_t i = p.id;
    grads.visible[i] = 1;
    grads.viewspace_grad[i] = std::hypot(g.mean[0] * Real(0.5) * Real(camera.width),
                                         g.mean[1] * Real(0.5) * Real(camera.height));

    for (int c = 0; c < 3; ++c) out.semantics[3 * i + c] += g.feature[c];
    const Real o = p.opacity;
    out.opacity_logits[i] += g.opacity * o * (Real(1) - o);

    // Color: SH coefficients and the view direction.
    Vec3<Real> d_mean = Vec3<Real>::Zero();
    {
      const Vec3<Real> v = gs.mean(i) - cam_center;
      const Real len = v.norm();
      const Vec3<Real> dir = len > Real(0) ? Vec3<Real>(v / len) : Vec3<Real>(0, 0, 1);
      std::array<Real, 16> basis{};
      std::array<Vec3<Real>, 16> dbasis{};
      sh_basis<Real>(dir, degree, basis, dbasis);
      Vec3<Real> d_raw;
      for (int c = 0; c < 3; ++c) d_raw[c] = p.color_clamped[c] ? Real(0) : g.color[c];
      const auto coeffs = gs.sh_of(i);
      auto d_coeffs = out.sh_of(i);
      Vec3<Real> d_dir = Vec3<Real>::Zero();
      for (int b = 0; b < sh_basis_count(degree); ++b) {
        Real along = 0;
        for (int c = 0; c < 3; ++c) {
          d_coeffs[3 * b + c] += basis[b] * d_raw[c];
          along += coeffs[3 * b + c] * d_raw[c];
        }
        d_dir += along * dbasis[b];
      }
      if (len > Real(0)) d_mean += (d_dir - dir * dir.dot(d_dir)) / len;
    }

    // Conic -> 2D covariance.
    const Mat2<Real> conic{{p.conic[0], p.conic[1]}, {p.conic[1], p.conic[2]}};
    const Mat2<Real> d_conic{{g.conic[0], Real(0.5) * g.conic[1]},
                             {Real(0.5) * g.conic[1], g.conic[2]}};
    const Mat2<Real> d_cov2 = -conic * d_conic * conic;

    const Vec3<Real>& t = p.cam_point;
    const Real inv_z = Real(1) / t[2];
    const Real inv_z2 = inv_z * inv_z;
    Eigen::Matrix<Real, 2, 3> jac;
    jac << fx * inv_z, 0, -fx * t[0] * inv_z2, 0, fy * inv_z, -fy * t[1] * inv_z2;

    const Vec4<Real> q = gs.rotation(i);
    const Mat3<Real> rot = rotation_matrix<Real>(q);
    const Vec3<Real> scale = gs.log_scale(i).array().exp().matrix();
    const Mat3<Real> l = rot * scale.asDiagonal();
    const Mat3<Real> cov3 = l * l.transpose();
    const Mat3<Real> m = w * cov3 * w.transpose();

    const Mat3<Real> d_m = jac.transpose() * d_cov2 * jac;
    const Eigen::Matrix<Real, 2, 3> d_jac = Real(2) * d_cov2 * jac * m;
    const Mat3<Real> d_cov3 = w.transpose() * d_m * w;
    const Mat3<Real> d_l = Real(2) * d_cov3 * l;
    Mat3<Real> d_rot;
    for (int col = 0; col < 3; ++col) d_rot.col(col) = d_l.col(col) * scale[col];
    for (int j = 0; j < 3; ++j) {
      out.log_scales[3 * i + j] += d_l.col(j).dot(rot.col(j)) * scale[j];
    }
    const Vec4<Real> d_q = quaternion_grad<Real>(q, d_rot);
    for (int j = 0; j < 4; ++j) out.rotations[4 * i + j] += d_q[j];

    // Camera-space point: through the Jacobian and the projected mean.
    Vec3<Real> d_t;
    d_t[0] = d_jac(0, 2) * (-fx * inv_z2) + g.mean[0] * fx * inv_z;
    d_t[1] = d_jac(1, 2) * (-fy * inv_z2) + g.mean[1] * fy * inv_z;
    d_t[2] = d_jac(0, 0) * (-fx * inv_z2) + d_jac(0, 2) * (Real(2) * fx * t[0] * inv_z2 * inv_z) +
             d_jac(1, 1) * (-fy * inv_z2) + d_jac(1, 2) * (Real(2) * fy * t[1] * inv_z2 * inv_z) -
             g.mean[0] * fx * t[0] * inv_z2 - g.mean[1] * fy * t[1] * inv_z2;
    d_mean += w.transpose() * d_t;
    for (int c = 0; c < 3; ++c) out.means[3 * i + c] += d_mean[c];
  }
}

template struct GradientBuffer<float>;
template struct GradientBuffer<double>;
template void backward_render(const Scene<float>&, const Camera&, const Image<float>*,
                              const Image<float>*, GradientBuffer<float>&, const RasterConfig&,
                              const RasterState<float>*);
template void backward_render(const Scene<double>&, const Camera&, const Image<double>*,
                              const Image<double>*, GradientBuffer<double>&, const RasterConfig&,
                              const RasterState<double>*);

}  // namespace semsplat
