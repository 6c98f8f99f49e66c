#include "semsplat/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include <Eigen/Eigenvalues>

#include "semsplat/error.hpp"

namespace semsplat {

namespace {

template <typename Real>
int active_degree(const RasterConfig& cfg, int stored) {
  if (cfg.sh_degree < 0) return stored;
  if (cfg.sh_degree > stored) {
    throw_invalid("active sh degree " + std::to_string(cfg.sh_degree) +
                  " exceeds stored degree " + std::to_string(stored));
  }
  return cfg.sh_degree;
}

template <typename Real>
Real max_eigenvalue_2x2(Real xx, Real xy, Real yy) {
  const Real mid = Real(0.5) * (xx + yy);
  const Real disc = std::sqrt(std::max(Real(0), mid * mid - (xx * yy - xy * xy)));
  return mid + disc;
}

template <typename Real>
std::optional<ProjectedGaussian<Real>> project_one(const GaussianSoA<Real>& g, std::size_t i,
                                                   const Camera& camera, const RasterConfig& cfg,
                                                   int degree, const Mat3<Real>& w,
                                                   const Vec3<Real>& trans,
                                                   const Vec3<Real>& cam_center) {
  const Vec3<Real> mean = g.mean(i);
  const Vec3<Real> t = w * mean + trans;
  if (!(t[2] > Real(camera.near)) || t[2] > Real(camera.far)) return std::nullopt;

  const Real fx = Real(camera.fx), fy = Real(camera.fy);
  const Real inv_z = Real(1) / t[2];
  Eigen::Matrix<Real, 2, 3> jac;
  jac << fx * inv_z, 0, -fx * t[0] * inv_z * inv_z, 0, fy * inv_z, -fy * t[1] * inv_z * inv_z;

  const Vec4<Real> q = g.rotation(i);
  const Mat3<Real> rot = rotation_matrix<Real>(q);
  const Vec3<Real> var = (Real(2) * g.log_scale(i).array()).exp().matrix();
  const Mat3<Real> cov3 = rot * var.asDiagonal() * rot.transpose();
  const Mat2<Real> cov2 = jac * (w * cov3 * w.transpose()) * jac.transpose();

  const Real raw_max = max_eigenvalue_2x2(cov2(0, 0), cov2(0, 1), cov2(1, 1));
  if (Real(3) * std::sqrt(raw_max) < Real(cfg.min_radius)) return std::nullopt;

  ProjectedGaussian<Real> p;
  p.id = static_cast<std::uint32_t>(i);
  p.cam_point = t;
  p.depth = t[2];
  p.mean2d = Vec2<Real>(fx * t[0] * inv_z + Real(camera.cx), fy * t[1] * inv_z + Real(camera.cy));
  const Real blur = Real(cfg.blur);
  p.cov2d = {cov2(0, 0) + blur, cov2(0, 1), cov2(1, 1) + blur};
  const Real det = p.cov2d[0] * p.cov2d[2] - p.cov2d[1] * p.cov2d[1];
  if (!(det > Real(0))) return std::nullopt;
  p.conic = {p.cov2d[2] / det, -p.cov2d[1] / det, p.cov2d[0] / det};
  p.opacity = g.opacity(i);

  // Footprint: every pixel where opacity * falloff can reach min_alpha.
  if (cfg.min_alpha > 0.0) {
    if (!(p.opacity > Real(cfg.min_alpha))) return std::nullopt;
    // The margin keeps every skipped exponent clearly below the floor despite rounding.
    p.min_power = std::log(Real(cfg.min_alpha) / p.opacity) - Real(1e-3);
    const Real lambda = max_eigenvalue_2x2(p.cov2d[0], p.cov2d[1], p.cov2d[2]);
    const Real extent =
        std::sqrt(Real(2) * std::log(p.opacity / Real(cfg.min_alpha)) * lambda) + Real(1);
    p.x0 = std::max(0, static_cast<int>(std::floor(p.mean2d[0] - extent - Real(0.5))));
    p.x1 = std::min(camera.width, static_cast<int>(std::ceil(p.mean2d[0] + extent + Real(0.5))));
    p.y0 = std::max(0, static_cast<int>(std::floor(p.mean2d[1] - extent - Real(0.5))));
    p.y1 = std::min(camera.height, static_cast<int>(std::ceil(p.mean2d[1] + extent + Real(0.5))));
    if (p.x0 >= p.x1 || p.y0 >= p.y1) return std::nullopt;
  } else {
    p.x0 = 0;
    p.y0 = 0;
    p.x1 = camera.width;
    p.y1 = camera.height;
  }

  Vec3<Real> dir = mean - cam_center;
  const Real len = dir.norm();
  dir = len > Real(0) ? Vec3<Real>(dir / len) : Vec3<Real>(0, 0, 1);
  std::array<Real, 16> basis{};
  sh_basis<Real>(dir, degree, basis);
  const auto coeffs = g.sh_of(i);
  for (int c = 0; c < 3; ++c) {
    Real raw = Real(0.5);
    for (int k = 0; k < sh_basis_count(degree); ++k) raw += basis[k] * coeffs[3 * k + c];
    p.color_clamped[c] = !(raw > Real(0) && raw < Real(1));
    p.color[c] = std::clamp(raw, Real(0), Real(1));
  }
  p.feature = g.semantic(i);
  return p;
}

template <typename Real>
bool depth_before(const ProjectedGaussian<Real>& a, const ProjectedGaussian<Real>& b) {
  if (a.depth != b.depth) return a.depth < b.depth;
  return a.id < b.id;
}

template <typename Real>
RenderOutput<Real> make_output(const Camera& camera, const RasterConfig& cfg) {
  RenderOutput<Real> out;
  out.color = Image<Real>(camera.width, camera.height, 3);
  out.alpha = Image<Real>(camera.width, camera.height, 1);
  out.depth = Image<Real>(camera.width, camera.height, 1);
  out.feature = Image<Real>(camera.width, camera.height, 3);
  if (cfg.record_contributors) out.contributors.resize(out.alpha.pixel_count());
  return out;
}

// Accumulates one pixel; shared by the tiled and naive paths so the
// contributor rule is literally the same code.
template <typename Real>
struct PixelBlend {
  Real transmittance = 1;
  Vec3<Real> color = Vec3<Real>::Zero();
  Vec3<Real> feature = Vec3<Real>::Zero();
  Real depth = 0;
  bool done = false;

  // Returns true when the Gaussian contributed.
  bool add(const ProjectedGaussian<Real>& p, Real px, Real py, Real min_alpha, Real min_t) {
    if (done) return false;
    const Real a = p.alpha_at(px, py);
    if (a < min_alpha || a <= Real(0)) return false;
    const Real weight = a * transmittance;
    color += weight * p.color;
    feature += weight * p.feature;
    depth += weight * p.depth;
    transmittance *= (Real(1) - a);
    if (transmittance < min_t) done = true;
    return true;
  }

  void write(RenderOutput<Real>& out, int x, int y, const std::array<Real, 3>& background) const {
    for (int c = 0; c < 3; ++c) {
      out.color.at(x, y, c) = color[c] + transmittance * background[c];
      out.feature.at(x, y, c) = feature[c];
    }
    const Real alpha = Real(1) - transmittance;
    out.alpha.at(x, y) = alpha;
    out.depth.at(x, y) = alpha > Real(0) ? depth / alpha : Real(0);
  }
};

}  // namespace

template <typename Real>
std::vector<ProjectedGaussian<Real>> project(const GaussianSoA<Real>& gaussians,
                                             const Camera& camera, const RasterConfig& cfg) {
  camera.validate();
  const int degree = active_degree<Real>(cfg, gaussians.sh_degree());
  const Mat3<Real> w = camera.rotation().cast<Real>();
  const Vec3<Real> trans = camera.translation().cast<Real>();
  const Vec3<Real> cam_center = camera.center().cast<Real>();

  const std::size_t n = gaussians.size();
  std::vector<std::optional<ProjectedGaussian<Real>>> slots(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    slots[i] = project_one(gaussians, static_cast<std::size_t>(i), camera, cfg, degree, w, trans,
                           cam_center);
  }
  std::vector<ProjectedGaussian<Real>> out;
  out.reserve(n);
  for (auto& s : slots) {
    if (s) out.push_back(*s);
  }
  return out;
}

template <typename Real>
RasterState<Real> prepare_frame(const Scene<Real>& scene, const Camera& camera,
                                const RasterConfig& cfg) {
  if (cfg.tile_size <= 0) throw_invalid("tile size must be positive");
  RasterState<Real> st;
  st.tile_size = cfg.tile_size;
  st.projected = project(scene.gaussians, camera, cfg);
  std::sort(st.projected.begin(), st.projected.end(), depth_before<Real>);

  st.tiles_x = (camera.width + cfg.tile_size - 1) / cfg.tile_size;
  st.tiles_y = (camera.height + cfg.tile_size - 1) / cfg.tile_size;
  const std::size_t tiles = static_cast<std::size_t>(st.tiles_x) * st.tiles_y;
  st.tile_offsets.assign(tiles + 1, 0);

  auto tile_range = [&](const ProjectedGaussian<Real>& p) {
    return std::array<int, 4>{p.x0 / cfg.tile_size, (p.x1 - 1) / cfg.tile_size,
                              p.y0 / cfg.tile_size, (p.y1 - 1) / cfg.tile_size};
  };
  for (const auto& p : st.projected) {
    const auto r = tile_range(p);
    for (int ty = r[2]; ty <= r[3]; ++ty) {
      for (int tx = r[0]; tx <= r[1]; ++tx) ++st.tile_offsets[ty * st.tiles_x + tx + 1];
    }
  }
  std::partial_sum(st.tile_offsets.begin(), st.tile_offsets.end(), st.tile_offsets.begin());
  st.tile_entries.resize(st.tile_offsets.back());
  std::vector<std::uint32_t> cursor(st.tile_offsets.begin(), st.tile_offsets.end() - 1);
  // Visiting in sorted order keeps every tile list depth-sorted.
  for (std::uint32_t k = 0; k < st.projected.size(); ++k) {
    const auto r = tile_range(st.projected[k]);
    for (int ty = r[2]; ty <= r[3]; ++ty) {
      for (int tx = r[0]; tx <= r[1]; ++tx) st.tile_entries[cursor[ty * st.tiles_x + tx]++] = k;
    }
  }
  return st;
}

template <typename Real>
RenderOutput<Real> render(const Scene<Real>& scene, const Camera& camera, const RasterConfig& cfg,
                          RasterState<Real>* state) {
  RasterState<Real> local;
  RasterState<Real>& st = state ? *state : local;
  st = prepare_frame(scene, camera, cfg);
  RenderOutput<Real> out = make_output<Real>(camera, cfg);
  const Real min_alpha = Real(cfg.min_alpha);
  const Real min_t = Real(cfg.min_transmittance);
  const int tiles = st.tiles_x * st.tiles_y;

#pragma omp parallel for schedule(dynamic)
  for (int tile = 0; tile < tiles; ++tile) {
    const int tx = tile % st.tiles_x;
    const int ty = tile / st.tiles_x;
    const std::uint32_t begin = st.tile_offsets[tile];
    const std::uint32_t end = st.tile_offsets[tile + 1];
    const int x_end = std::min(camera.width, (tx + 1) * cfg.tile_size);
    const int y_end = std::min(camera.height, (ty + 1) * cfg.tile_size);
    for (int y = ty * cfg.tile_size; y < y_end; ++y) {
      for (int x = tx * cfg.tile_size; x < x_end; ++x) {
        const Real px = Real(x) + Real(0.5);
        const Real py = Real(y) + Real(0.5);
        PixelBlend<Real> blend;
        for (std::uint32_t e = begin; e < end && !blend.done; ++e) {
          const auto& p = st.projected[st.tile_entries[e]];
          if (blend.add(p, px, py, min_alpha, min_t) && cfg.record_contributors) {
            out.contributors[static_cast<std::size_t>(y) * camera.width + x].push_back(p.id);
          }
        }
        blend.write(out, x, y, scene.background);
      }
    }
  }
  return out;
}

template <typename Real>
RenderOutput<Real> render_naive(const Scene<Real>& scene, const Camera& camera,
                                const RasterConfig& cfg) {
  std::vector<ProjectedGaussian<Real>> projected = project(scene.gaussians, camera, cfg);
  std::sort(projected.begin(), projected.end(), depth_before<Real>);
  RenderOutput<Real> out = make_output<Real>(camera, cfg);
  const Real min_alpha = Real(cfg.min_alpha);
  const Real min_t = Real(cfg.min_transmittance);

#pragma omp parallel for schedule(dynamic)
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Real px = Real(x) + Real(0.5);
      const Real py = Real(y) + Real(0.5);
      PixelBlend<Real> blend;
      for (const auto& p : projected) {
        if (blend.add(p, px, py, min_alpha, min_t) && cfg.record_contributors) {
          out.contributors[static_cast<std::size_t>(y) * camera.width + x].push_back(p.id);
        }
      }
      blend.write(out, x, y, scene.background);
    }
  }
  return out;
}

template std::vector<ProjectedGaussian<float>> project(const GaussianSoA<float>&, const Camera&,
                                                       const RasterConfig&);
template std::vector<ProjectedGaussian<double>> project(const GaussianSoA<double>&, const Camera&,
                                                        const RasterConfig&);
template RasterState<float> prepare_frame(const Scene<float>&, const Camera&, const RasterConfig&);
template RasterState<double> prepare_frame(const Scene<double>&, const Camera&,
                                           const RasterConfig&);
template RenderOutput<float> render(const Scene<float>&, const Camera&, const RasterConfig&,
                                   RasterState<float>*);
template RenderOutput<double> render(const Scene<double>&, const Camera&, const RasterConfig&,
                                    RasterState<double>*);
template RenderOutput<float> render_naive(const Scene<float>&, const Camera&, const RasterConfig&);
template RenderOutput<double> render_naive(const Scene<double>&, const Camera&,
                                           const RasterConfig&);

}  // namespace semsplat
