#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "semsplat/camera.hpp"
#include "semsplat/image.hpp"
#include "semsplat/scene.hpp"

namespace semsplat {

/// Per-frame rasterization settings. Pixel centers sit at (x + 0.5, y + 0.5).
struct RasterConfig {
  int tile_size = 16;
  /// Per-pixel alphas below this are not contributors. The tile footprint
  /// of each Gaussian is sized so that no pixel outside it can reach it.
  double min_alpha = 1.0 / 255.0;
  /// A pixel stops blending once its transmittance falls below this.
  double min_transmittance = 1e-4;
  /// Isotropic screen-space regularization added to every 2D covariance (px^2).
  double blur = 0.3;
  /// Gaussians whose unregularized 3-sigma screen radius is below this are culled.
  double min_radius = 0.3;
  /// Active SH degree; -1 uses every stored band.
  int sh_degree = -1;
  /// Record the ids of each pixel's contributors in RenderOutput.
  bool record_contributors = false;

  /// No alpha floor and no transmittance cutoff: every projected Gaussian
  /// contributes to every pixel. Smooth in all parameters.
  static RasterConfig exact() {
    RasterConfig cfg;
    cfg.min_alpha = 0.0;
    cfg.min_transmittance = 0.0;
    return cfg;
  }
};

template <typename Real>
struct ProjectedGaussian {
  std::uint32_t id = 0;
  Vec2<Real> mean2d = Vec2<Real>::Zero();
  std::array<Real, 3> cov2d{};  // xx, xy, yy (regularized)
  std::array<Real, 3> conic{};  // inverse of cov2d: xx, xy, yy
  Real depth = 0;
  Vec3<Real> color = Vec3<Real>::Zero();
  std::array<bool, 3> color_clamped{};
  Real opacity = 0;
  Vec3<Real> feature = Vec3<Real>::Zero();
  Vec3<Real> cam_point = Vec3<Real>::Zero();
  /// Exponents below this give alpha under the floor; skipping exp for
  /// them changes no output.
  Real min_power = -std::numeric_limits<Real>::infinity();
  // Pixel footprint, half-open [x0, x1) x [y0, y1).
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  /// Opacity times the Gaussian falloff at pixel center (px, py).
  Real alpha_at(Real px, Real py) const {
    const Real dx = px - mean2d[0];
    const Real dy = py - mean2d[1];
    Real power = Real(-0.5) * (conic[0] * dx * dx + conic[2] * dy * dy) - conic[1] * dx * dy;
    if (power > Real(0)) power = Real(0);
    if (power < min_power) return Real(0);
    return opacity * std::exp(power);
  }
};

template <typename Real>
struct RenderOutput {
  Image<Real> color;    // H x W x 3
  Image<Real> alpha;    // H x W, 1 - final transmittance
  Image<Real> depth;    // H x W, contribution-weighted mean camera depth
  Image<Real> feature;  // H x W x 3, blended semantic codes over zero
  std::vector<std::vector<std::uint32_t>> contributors;  // per pixel, when requested
};

/// Projection plus tile binning of one frame. The backward pass reuses it
/// so it sees exactly the contributor sets of the forward pass.
template <typename Real>
struct RasterState {
  std::vector<ProjectedGaussian<Real>> projected;  // sorted by (depth, id)
  std::vector<std::uint32_t> tile_offsets;         // tiles + 1 prefix sums
  std::vector<std::uint32_t> tile_entries;         // indices into projected
  int tiles_x = 0;
  int tiles_y = 0;
  int tile_size = 16;
};

/// Perspective projection with first-order covariance propagation and
/// culling. Output order follows Gaussian storage order.
template <typename Real>
std::vector<ProjectedGaussian<Real>> project(const GaussianSoA<Real>& gaussians,
                                             const Camera& camera,
                                             const RasterConfig& cfg = {});

/// Tile-based front-to-back alpha compositing of color, depth and semantic
/// features.
template <typename Real>
RenderOutput<Real> render(const Scene<Real>& scene, const Camera& camera,
                          const RasterConfig& cfg = {}, RasterState<Real>* state = nullptr);

/// Reference renderer: one global depth sort, every Gaussian evaluated at
/// every pixel, same per-pixel contributor rule as render().
template <typename Real>
RenderOutput<Real> render_naive(const Scene<Real>& scene, const Camera& camera,
                                const RasterConfig& cfg = {});

/// Builds the projection, global sort and per-tile lists used by render().
template <typename Real>
RasterState<Real> prepare_frame(const Scene<Real>& scene, const Camera& camera,
                                const RasterConfig& cfg);

}  // namespace semsplat
