#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace semsplat {

inline constexpr int kSemanticDim = 3;
inline constexpr int kMaxShDegree = 3;

constexpr int sh_basis_count(int degree) { return (degree + 1) * (degree + 1); }

template <typename Real>
using Vec2 = Eigen::Matrix<Real, 2, 1>;
template <typename Real>
using Vec3 = Eigen::Matrix<Real, 3, 1>;
template <typename Real>
using Vec4 = Eigen::Matrix<Real, 4, 1>;
template <typename Real>
using Mat2 = Eigen::Matrix<Real, 2, 2>;
template <typename Real>
using Mat3 = Eigen::Matrix<Real, 3, 3>;

/// Parameter groups of the Gaussian set, in storage order.
enum class ParamGroup { kMeans, kRotations, kLogScales, kOpacity, kSh, kSemantics };

inline constexpr std::array<ParamGroup, 6> kParamGroups = {
    ParamGroup::kMeans, ParamGroup::kRotations, ParamGroup::kLogScales,
    ParamGroup::kOpacity, ParamGroup::kSh, ParamGroup::kSemantics};

const char* param_group_name(ParamGroup group);

/// One Gaussian in array-of-structs form; used to build and inspect rows.
template <typename Real>
struct GaussianRow {
  Vec3<Real> mean = Vec3<Real>::Zero();
  Vec4<Real> rotation = Vec4<Real>(1, 0, 0, 0);  // wxyz
  Vec3<Real> log_scale = Vec3<Real>::Zero();
  Real opacity_logit = 0;
  std::vector<Real> sh;  // basis-major: sh[k * 3 + channel]
  Vec3<Real> semantic = Vec3<Real>::Zero();
};

/// Structure-of-arrays Gaussian storage. Every group is a flat array with a
/// fixed per-row stride so optimizers and edits can treat groups uniformly.
template <typename Real>
struct GaussianSoA {
  std::vector<Real> means;           // 3 per row
  std::vector<Real> rotations;       // 4 per row, wxyz
  std::vector<Real> log_scales;      // 3 per row
  std::vector<Real> opacity_logits;  // 1 per row
  std::vector<Real> sh;              // 3 * (deg+1)^2 per row
  std::vector<Real> semantics;       // 3 per row

  explicit GaussianSoA(int sh_degree = kMaxShDegree);

  int sh_degree() const { return sh_degree_; }
  int sh_basis() const { return sh_basis_count(sh_degree_); }
  std::size_t size() const { return opacity_logits.size(); }
  bool empty() const { return opacity_logits.empty(); }

  std::size_t stride(ParamGroup group) const;
  std::vector<Real>& group(ParamGroup group);
  const std::vector<Real>& group(ParamGroup group) const;

  Eigen::Map<Vec3<Real>> mean(std::size_t i) { return Eigen::Map<Vec3<Real>>(&means[3 * i]); }
  Eigen::Map<const Vec3<Real>> mean(std::size_t i) const {
    return Eigen::Map<const Vec3<Real>>(&means[3 * i]);
  }
  Eigen::Map<Vec4<Real>> rotation(std::size_t i) {
    return Eigen::Map<Vec4<Real>>(&rotations[4 * i]);
  }
  Eigen::Map<const Vec4<Real>> rotation(std::size_t i) const {
    return Eigen::Map<const Vec4<Real>>(&rotations[4 * i]);
  }
  Eigen::Map<Vec3<Real>> log_scale(std::size_t i) {
    return Eigen::Map<Vec3<Real>>(&log_scales[3 * i]);
  }
  Eigen::Map<const Vec3<Real>> log_scale(std::size_t i) const {
    return Eigen::Map<const Vec3<Real>>(&log_scales[3 * i]);
  }
  Eigen::Map<Vec3<Real>> semantic(std::size_t i) {
    return Eigen::Map<Vec3<Real>>(&semantics[3 * i]);
  }
  Eigen::Map<const Vec3<Real>> semantic(std::size_t i) const {
    return Eigen::Map<const Vec3<Real>>(&semantics[3 * i]);
  }
  std::span<Real> sh_of(std::size_t i) {
    return {sh.data() + i * sh_stride(), sh_stride()};
  }
  std::span<const Real> sh_of(std::size_t i) const {
    return {sh.data() + i * sh_stride(), sh_stride()};
  }
  Real opacity(std::size_t i) const;

  void push_back(const GaussianRow<Real>& row);
  GaussianRow<Real> row(std::size_t i) const;
  /// Appends a copy of row `i` of `src` (which must share the SH degree).
  void append_from(const GaussianSoA& src, std::size_t i);
  /// Keeps rows with keep[i] != 0, preserving order.
  void keep_rows(std::span<const char> keep);
  void clear();

  /// All groups hold exactly size() rows.
  bool consistent() const;
  bool all_finite() const;

  template <typename Other>
  GaussianSoA<Other> cast() const {
    GaussianSoA<Other> out(sh_degree_);
    out.means.assign(means.begin(), means.end());
    out.rotations.assign(rotations.begin(), rotations.end());
    out.log_scales.assign(log_scales.begin(), log_scales.end());
    out.opacity_logits.assign(opacity_logits.begin(), opacity_logits.end());
    out.sh.assign(sh.begin(), sh.end());
    out.semantics.assign(semantics.begin(), semantics.end());
    return out;
  }

  bool operator==(const GaussianSoA&) const = default;

 private:
  std::size_t sh_stride() const { return 3 * static_cast<std::size_t>(sh_basis()); }
  int sh_degree_;
};

/// Rotation matrix of the normalized quaternion (wxyz).
template <typename Real>
Mat3<Real> rotation_matrix(const Vec4<Real>& q);

/// R * diag(exp(2 * log_scale)) * R^T. Throws invalid-parameter on
/// non-finite input or a quaternion farther than 1e-4 from unit norm.
template <typename Real>
Mat3<Real> covariance_of(const Vec4<Real>& q, const Vec3<Real>& log_scale);

inline constexpr double kShC0 = 0.28209479177387814;

/// Real SH basis values (and optionally their Jacobian w.r.t. the unit
/// direction) up to `degree`. Ordering is l^2 + l + m.
template <typename Real>
void sh_basis(const Vec3<Real>& dir, int degree, std::span<Real> out,
              std::span<Vec3<Real>> jacobian = {});

/// Degree-`degree` SH color along `view_dir`, offset by 0.5 and clamped to
/// [0,1]. `coeffs` is basis-major with `stored_degree` bands.
template <typename Real>
Vec3<Real> sh_to_color(std::span<const Real> coeffs, const Vec3<Real>& view_dir, int degree,
                       int stored_degree);

/// DC coefficient that makes sh_to_color return `rgb` at degree 0.
template <typename Real>
Real rgb_to_sh_dc(Real rgb) {
  return (rgb - Real(0.5)) / static_cast<Real>(kShC0);
}

template <typename Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

template <typename Real>
Real logit(Real p) {
  return std::log(p / (Real(1) - p));
}

}  // namespace semsplat
