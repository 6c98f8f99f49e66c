#include "semsplat/gaussians.hpp"

#include <cmath>

#include "semsplat/error.hpp"

namespace semsplat {

const char* param_group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::kMeans: return "means";
    case ParamGroup::kRotations: return "rotations";
    case ParamGroup::kLogScales: return "log_scales";
    case ParamGroup::kOpacity: return "opacity";
    case ParamGroup::kSh: return "sh";
    case ParamGroup::kSemantics: return "semantics";
  }
  return "?";
}

template <typename Real>
GaussianSoA<Real>::GaussianSoA(int sh_degree) : sh_degree_(sh_degree) {
  if (sh_degree < 0 || sh_degree > kMaxShDegree) {
    throw_invalid("sh degree must be in [0, 3], got " + std::to_string(sh_degree));
  }
}

template <typename Real>
std::size_t GaussianSoA<Real>::stride(ParamGroup group) const {
  switch (group) {
    case ParamGroup::kMeans: return 3;
    case ParamGroup::kRotations: return 4;
    case ParamGroup::kLogScales: return 3;
    case ParamGroup::kOpacity: return 1;
    case ParamGroup::kSh: return sh_stride();
    case ParamGroup::kSemantics: return kSemanticDim;
  }
  return 0;
}

template <typename Real>
std::vector<Real>& GaussianSoA<Real>::group(ParamGroup group) {
  switch (group) {
    case ParamGroup::kMeans: return means;
    case ParamGroup::kRotations: return rotations;
    case ParamGroup::kLogScales: return log_scales;
    case ParamGroup::kOpacity: return opacity_logits;
    case ParamGroup::kSh: return sh;
    case ParamGroup::kSemantics: return semantics;
  }
  return means;
}

template <typename Real>
const std::vector<Real>& GaussianSoA<Real>::group(ParamGroup group) const {
  return const_cast<GaussianSoA*>(this)->group(group);
}

template <typename Real>
Real GaussianSoA<Real>::opacity(std::size_t i) const {
  return sigmoid(opacity_logits[i]);
}

template <typename Real>
void GaussianSoA<Real>::push_back(const GaussianRow<Real>& row) {
  if (row.sh.size() != sh_stride()) {
    throw_invalid("sh row has " + std::to_string(row.sh.size()) + " coefficients, expected " +
                  std::to_string(sh_stride()));
  }
  means.insert(means.end(), row.mean.data(), row.mean.data() + 3);
  rotations.insert(rotations.end(), row.rotation.data(), row.rotation.data() + 4);
  log_scales.insert(log_scales.end(), row.log_scale.data(), row.log_scale.data() + 3);
  opacity_logits.push_back(row.opacity_logit);
  sh.insert(sh.end(), row.sh.begin(), row.sh.end());
  semantics.insert(semantics.end(), row.semantic.data(), row.semantic.data() + 3);
}

template <typename Real>
GaussianRow<Real> GaussianSoA<Real>::row(std::size_t i) const {
  GaussianRow<Real> r;
  r.mean = mean(i);
  r.rotation = rotation(i);
  r.log_scale = log_scale(i);
  r.opacity_logit = opacity_logits[i];
  auto coeffs = sh_of(i);
  r.sh.assign(coeffs.begin(), coeffs.end());
  r.semantic = semantic(i);
  return r;
}

template <typename Real>
void GaussianSoA<Real>::append_from(const GaussianSoA& src, std::size_t i) {
  if (src.sh_degree() != sh_degree_) throw_invalid("append_from: sh degree mismatch");
  if (&src == this) {
    push_back(row(i));
    return;
  }
  for (ParamGroup g : kParamGroups) {
    const std::size_t s = stride(g);
    const auto& from = src.group(g);
    auto& to = group(g);
    to.insert(to.end(), from.begin() + static_cast<std::ptrdiff_t>(i * s),
              from.begin() + static_cast<std::ptrdiff_t>((i + 1) * s));
  }
}

template <typename Real>
void GaussianSoA<Real>::keep_rows(std::span<const char> keep) {
  if (keep.size() != size()) throw_invalid("keep_rows: mask length mismatch");
  for (ParamGroup g : kParamGroups) {
    const std::size_t s = stride(g);
    auto& data = group(g);
    std::size_t out = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (!keep[i]) continue;
      if (out != i) {
        for (std::size_t k = 0; k < s; ++k) data[out * s + k] = data[i * s + k];
      }
      ++out;
    }
    data.resize(out * s);
  }
}

template <typename Real>
void GaussianSoA<Real>::clear() {
  for (ParamGroup g : kParamGroups) group(g).clear();
}

template <typename Real>
bool GaussianSoA<Real>::consistent() const {
  const std::size_t n = size();
  for (ParamGroup g : kParamGroups) {
    if (group(g).size() != n * stride(g)) return false;
  }
  return true;
}

template <typename Real>
bool GaussianSoA<Real>::all_finite() const {
  for (ParamGroup g : kParamGroups) {
    for (Real v : group(g)) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <typename Real>
Mat3<Real> rotation_matrix(const Vec4<Real>& q_in) {
  const Vec4<Real> q = q_in / q_in.norm();
  const Real w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3<Real> r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

template <typename Real>
Mat3<Real> covariance_of(const Vec4<Real>& q, const Vec3<Real>& log_scale) {
  if (!q.allFinite() || !log_scale.allFinite()) {
    throw_invalid("covariance_of: non-finite quaternion or scale");
  }
  if (std::abs(q.norm() - Real(1)) > Real(1e-4)) {
    throw_invalid("covariance_of: quaternion is not unit norm");
  }
  const Mat3<Real> r = rotation_matrix<Real>(q);
  const Vec3<Real> var = (Real(2) * log_scale.array()).exp().matrix();
  const Mat3<Real> c = r * var.asDiagonal() * r.transpose();
  // Symmetric by construction; rounding would otherwise leave ulp-level skew.
  return Real(0.5) * (c + c.transpose());
}

namespace {

// Band constants shared with the reference splatting implementations.
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                          0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};

}  // namespace

template <typename Real>
void sh_basis(const Vec3<Real>& dir, int degree, std::span<Real> out,
              std::span<Vec3<Real>> jac) {
  const bool want_jac = !jac.empty();
  const Real x = dir[0], y = dir[1], z = dir[2];
  auto set = [&](int k, Real v, Real dx, Real dy, Real dz) {
    out[k] = v;
    if (want_jac) jac[k] = Vec3<Real>(dx, dy, dz);
  };
  set(0, Real(kShC0), 0, 0, 0);
  if (degree < 1) return;
  const Real c1 = Real(kC1);
  set(1, -c1 * y, 0, -c1, 0);
  set(2, c1 * z, 0, 0, c1);
  set(3, -c1 * x, -c1, 0, 0);
  if (degree < 2) return;
  const Real xx = x * x, yy = y * y, zz = z * z;
  set(4, Real(kC2[0]) * x * y, Real(kC2[0]) * y, Real(kC2[0]) * x, 0);
  set(5, Real(kC2[1]) * y * z, 0, Real(kC2[1]) * z, Real(kC2[1]) * y);
  set(6, Real(kC2[2]) * (2 * zz - xx - yy), Real(kC2[2]) * -2 * x, Real(kC2[2]) * -2 * y,
      Real(kC2[2]) * 4 * z);
  set(7, Real(kC2[3]) * x * z, Real(kC2[3]) * z, 0, Real(kC2[3]) * x);
  set(8, Real(kC2[4]) * (xx - yy), Real(kC2[4]) * 2 * x, Real(kC2[4]) * -2 * y, 0);
  if (degree < 3) return;
  set(9, Real(kC3[0]) * y * (3 * xx - yy), Real(kC3[0]) * 6 * x * y,
      Real(kC3[0]) * (3 * xx - 3 * yy), 0);
  set(10, Real(kC3[1]) * x * y * z, Real(kC3[1]) * y * z, Real(kC3[1]) * x * z,
      Real(kC3[1]) * x * y);
  set(11, Real(kC3[2]) * y * (4 * zz - xx - yy), Real(kC3[2]) * -2 * x * y,
      Real(kC3[2]) * (4 * zz - xx - 3 * yy), Real(kC3[2]) * 8 * y * z);
  set(12, Real(kC3[3]) * z * (2 * zz - 3 * xx - 3 * yy), Real(kC3[3]) * -6 * x * z,
      Real(kC3[3]) * -6 * y * z, Real(kC3[3]) * (6 * zz - 3 * xx - 3 * yy));
  set(13, Real(kC3[4]) * x * (4 * zz - xx - yy), Real(kC3[4]) * (4 * zz - 3 * xx - yy),
      Real(kC3[4]) * -2 * x * y, Real(kC3[4]) * 8 * x * z);
  set(14, Real(kC3[5]) * z * (xx - yy), Real(kC3[5]) * 2 * x * z, Real(kC3[5]) * -2 * y * z,
      Real(kC3[5]) * (xx - yy));
  set(15, Real(kC3[6]) * x * (xx - 3 * yy), Real(kC3[6]) * (3 * xx - 3 * yy),
      Real(kC3[6]) * -6 * x * y, 0);
}

template <typename Real>
Vec3<Real> sh_to_color(std::span<const Real> coeffs, const Vec3<Real>& view_dir, int degree,
                       int stored_degree) {
  if (degree < 0 || degree > stored_degree) {
    throw_invalid("sh_to_color: degree " + std::to_string(degree) + " exceeds stored degree " +
                  std::to_string(stored_degree));
  }
  if (coeffs.size() != 3 * static_cast<std::size_t>(sh_basis_count(stored_degree))) {
    throw_invalid("sh_to_color: coefficient count does not match stored degree");
  }
  std::array<Real, 16> basis{};
  sh_basis<Real>(view_dir, degree, basis);
  Vec3<Real> rgb = Vec3<Real>::Constant(Real(0.5));
  for (int k = 0; k < sh_basis_count(degree); ++k) {
    for (int c = 0; c < 3; ++c) rgb[c] += basis[k] * coeffs[3 * k + c];
  }
  return rgb.cwiseMax(Real(0)).cwiseMin(Real(1));
}

template struct GaussianSoA<float>;
template struct GaussianSoA<double>;
template Mat3<float> rotation_matrix(const Vec4<float>&);
template Mat3<double> rotation_matrix(const Vec4<double>&);
template Mat3<float> covariance_of(const Vec4<float>&, const Vec3<float>&);
template Mat3<double> covariance_of(const Vec4<double>&, const Vec3<double>&);
template void sh_basis(const Vec3<float>&, int, std::span<float>, std::span<Vec3<float>>);
template void sh_basis(const Vec3<double>&, int, std::span<double>, std::span<Vec3<double>>);
template Vec3<float> sh_to_color(std::span<const float>, const Vec3<float>&, int, int);
template Vec3<double> sh_to_color(std::span<const double>, const Vec3<double>&, int, int);

}  // namespace semsplat
