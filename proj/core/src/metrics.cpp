#include "semsplat/metrics.hpp"

#include <array>
#include <cmath>

#include "semsplat/error.hpp"

namespace semsplat {

namespace {

template <typename A, typename B>
void require_same_shape(const Image<A>& a, const Image<B>& b, const char* what) {
  if (!a.same_shape(b)) throw_invalid(std::string(what) + ": image shapes differ");
}

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Single-channel planar buffer used by the separable filters.
template <typename Real>
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<Real> v;
  Plane(int w, int h) : width(w), height(h), v(static_cast<std::size_t>(w) * h, Real(0)) {}
  Real& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  Real at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

// Valid-mode separable correlation: (W, H) -> (W - 10, H - 10).
template <typename Real>
Plane<Real> filter_valid(const Plane<Real>& in) {
  static const auto w = gaussian_window();
  const int ow = in.width - kSsimWindow + 1;
  const int oh = in.height - kSsimWindow + 1;
  Plane<Real> tmp(ow, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < ow; ++x) {
      Real s = 0;
      for (int k = 0; k < kSsimWindow; ++k) s += Real(w[k]) * in.at(x + k, y);
      tmp.at(x, y) = s;
    }
  }
  Plane<Real> out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      Real s = 0;
      for (int k = 0; k < kSsimWindow; ++k) s += Real(w[k]) * tmp.at(x, y + k);
      out.at(x, y) = s;
    }
  }
  return out;
}

// Adjoint of filter_valid: (W - 10, H - 10) -> (W, H).
template <typename Real>
Plane<Real> filter_adjoint(const Plane<Real>& in, int width, int height) {
  static const auto w = gaussian_window();
  Plane<Real> tmp(in.width, height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const Real m = in.at(x, y);
      for (int k = 0; k < kSsimWindow; ++k) tmp.at(x, y + k) += Real(w[k]) * m;
    }
  }
  Plane<Real> out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const Real m = tmp.at(x, y);
      for (int k = 0; k < kSsimWindow; ++k) out.at(x + k, y) += Real(w[k]) * m;
    }
  }
  return out;
}

template <typename Real>
Plane<Real> channel(const Image<Real>& img, int c) {
  Plane<Real> p(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) p.at(x, y) = img.at(x, y, c);
  }
  return p;
}

template <typename Real>
Plane<Real> product(const Plane<Real>& a, const Plane<Real>& b) {
  Plane<Real> out(a.width, a.height);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

template <typename Real>
Real ssim_impl(const Image<Real>& a, const Image<Real>& b, Image<Real>* grad) {
  require_same_shape(a, b, "ssim");
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw_invalid("ssim: image smaller than the 11x11 window");
  }
  const Real c1 = Real(kSsimC1);
  const Real c2 = Real(kSsimC2);
  const int ow = a.width - kSsimWindow + 1;
  const int oh = a.height - kSsimWindow + 1;
  const Real count = Real(ow) * Real(oh) * Real(a.channels);
  if (grad) *grad = Image<Real>(a.width, a.height, a.channels);

  Real total = 0;
  for (int c = 0; c < a.channels; ++c) {
    const Plane<Real> pa = channel(a, c);
    const Plane<Real> pb = channel(b, c);
    const Plane<Real> mu_a = filter_valid(pa);
    const Plane<Real> mu_b = filter_valid(pb);
    const Plane<Real> e_aa = filter_valid(product(pa, pa));
    const Plane<Real> e_bb = filter_valid(product(pb, pb));
    const Plane<Real> e_ab = filter_valid(product(pa, pb));

    Plane<Real> m_const(ow, oh), m_b(ow, oh), m_a(ow, oh);
    for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
      const Real ma = mu_a.v[i], mb = mu_b.v[i];
      const Real var_a = e_aa.v[i] - ma * ma;
      const Real var_b = e_bb.v[i] - mb * mb;
      const Real cov = e_ab.v[i] - ma * mb;
      const Real a1 = Real(2) * ma * mb + c1;
      const Real a2 = Real(2) * cov + c2;
      const Real b1 = ma * ma + mb * mb + c1;
      const Real b2 = var_a + var_b + c2;
      const Real s = (a1 * a2) / (b1 * b2);
      total += s;
      if (grad) {
        const Real d_mu_b = Real(2) * ma * a2 / (b1 * b2) - Real(2) * mb * s / b1;
        const Real d_var_b = -s / b2;
        const Real d_cov = Real(2) * a1 / (b1 * b2);
        m_const.v[i] = d_mu_b - Real(2) * mb * d_var_b - ma * d_cov;
        m_b.v[i] = Real(2) * d_var_b;
        m_a.v[i] = d_cov;
      }
    }
    if (grad) {
      const Plane<Real> g0 = filter_adjoint(m_const, a.width, a.height);
      const Plane<Real> gb = filter_adjoint(m_b, a.width, a.height);
      const Plane<Real> ga = filter_adjoint(m_a, a.width, a.height);
      for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
          grad->at(x, y, c) =
              (g0.at(x, y) + pb.at(x, y) * gb.at(x, y) + pa.at(x, y) * ga.at(x, y)) / count;
        }
      }
    }
  }
  return total / count;
}

}  // namespace

template <typename Real>
double psnr(const Image<Real>& a, const Image<Real>& b) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw_invalid("psnr: empty images");
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.data.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

template <typename Real>
Real ssim(const Image<Real>& a, const Image<Real>& b) {
  return ssim_impl<Real>(a, b, nullptr);
}

template <typename Real>
SsimGradient<Real> ssim_with_gradient(const Image<Real>& a, const Image<Real>& b) {
  SsimGradient<Real> out;
  out.value = ssim_impl<Real>(a, b, &out.d_b);
  return out;
}

double iou(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool g = gt.data[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double miou(std::span<const Mask> pred, std::span<const Mask> gt) {
  if (pred.size() != gt.size()) throw_invalid("miou: prediction and ground-truth counts differ");
  if (pred.empty()) throw_invalid("miou: no queries");
  double sum = 0.0;
  for (std::size_t q = 0; q < pred.size(); ++q) sum += iou(pred[q], gt[q]);
  return sum / static_cast<double>(pred.size());
}

LocalizationResult localization_accuracy(std::span<const Image<float>> relevancy_maps,
                                         std::span<const Mask> gt) {
  if (relevancy_maps.size() != gt.size()) {
    throw_invalid("localization_accuracy: map and mask counts differ");
  }
  LocalizationResult r;
  for (std::size_t q = 0; q < gt.size(); ++q) {
    const auto& map = relevancy_maps[q];
    const auto& mask = gt[q];
    if (map.width != mask.width || map.height != mask.height || map.channels != 1) {
      throw_invalid("localization_accuracy: relevancy map shape differs from mask");
    }
    bool any = false;
    for (auto v : mask.data) any = any || v != 0;
    if (!any) {
      r.skipped.push_back(static_cast<int>(q));
      continue;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < map.data.size(); ++i) {
      if (map.data[i] > map.data[best]) best = i;
    }
    ++r.evaluated;
    if (mask.data[best] != 0) ++r.correct;
  }
  r.accuracy = r.evaluated ? static_cast<double>(r.correct) / r.evaluated : 0.0;
  return r;
}

Mask label_mask(const LabelMap& labels, int label) {
  Mask m(labels.width, labels.height, 1);
  for (std::size_t i = 0; i < labels.data.size(); ++i) m.data[i] = labels.data[i] == label ? 1 : 0;
  return m;
}

template double psnr(const Image<float>&, const Image<float>&);
template double psnr(const Image<double>&, const Image<double>&);
template float ssim(const Image<float>&, const Image<float>&);
template double ssim(const Image<double>&, const Image<double>&);
template SsimGradient<float> ssim_with_gradient(const Image<float>&, const Image<float>&);
template SsimGradient<double> ssim_with_gradient(const Image<double>&, const Image<double>&);

}  // namespace semsplat
