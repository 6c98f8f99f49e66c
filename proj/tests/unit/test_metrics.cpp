#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "semsplat/error.hpp"
#include "semsplat/metrics.hpp"
#include "test_scenes.hpp"

using namespace semsplat;

namespace {

Image<double> random_image(int w, int h, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Image<double> img(w, h, c);
  for (auto& v : img.data) v = uni(rng);
  return img;
}

// Direct per-window SSIM with an explicit 2D kernel, no separable filtering.
double ssim_brute_force(const Image<double>& a, const Image<double>& b) {
  const int r = kSsimWindow / 2;
  std::vector<double> kernel(kSsimWindow * kSsimWindow);
  double total = 0.0;
  for (int j = 0; j < kSsimWindow; ++j) {
    for (int i = 0; i < kSsimWindow; ++i) {
      const double dx = i - r, dy = j - r;
      kernel[j * kSsimWindow + i] = std::exp(-(dx * dx + dy * dy) / (2 * kSsimSigma * kSsimSigma));
      total += kernel[j * kSsimWindow + i];
    }
  }
  for (double& k : kernel) k /= total;
  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = r; y < a.height - r; ++y) {
      for (int x = r; x < a.width - r; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int j = 0; j < kSsimWindow; ++j) {
          for (int i = 0; i < kSsimWindow; ++i) {
            const double w = kernel[j * kSsimWindow + i];
            const double va = a.at(x - r + i, y - r + j, c);
            const double vb = b.at(x - r + i, y - r + j, c);
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        }
        saa -= ma * ma;
        sbb -= mb * mb;
        sab -= ma * mb;
        sum += ((2 * ma * mb + kSsimC1) * (2 * sab + kSsimC2)) /
               ((ma * ma + mb * mb + kSsimC1) * (saa + sbb + kSsimC2));
        ++count;
      }
    }
  }
  return sum / count;
}

Mask mask_from(int w, int h, const std::vector<std::pair<int, int>>& pixels) {
  Mask m(w, h, 1, 0);
  for (auto [x, y] : pixels) m.at(x, y) = 1;
  return m;
}

}  // namespace

TEST(Psnr, IdenticalImagesHitCap) {
  const auto a = random_image(8, 8, 3, 1);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Psnr, UniformDifferenceOfOneTenthIsTwentyDb) {
  const Image<double> a(16, 16, 3, 0.25);
  const Image<double> b(16, 16, 3, 0.35);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
}

TEST(Psnr, MatchesDirectMse) {
  const auto a = random_image(9, 7, 3, 2);
  const auto b = random_image(9, 7, 3, 3);
  double se = 0.0;
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 9; ++x)
      for (int c = 0; c < 3; ++c) se += std::pow(a.at(x, y, c) - b.at(x, y, c), 2);
  EXPECT_NEAR(psnr(a, b), -10.0 * std::log10(se / (9 * 7 * 3)), 1e-10);
}

TEST(Psnr, StrictlyDecreasesWithNoiseAmplitude) {
  const auto a = random_image(16, 16, 3, 4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sign(-1.0, 1.0);
  std::vector<double> noise(a.data.size());
  for (auto& n : noise) n = sign(rng);
  double prev = kPsnrCap;
  for (double amp : {0.001, 0.01, 0.05, 0.1, 0.3}) {
    auto b = a;
    for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] += amp * noise[i];
    const double p = psnr(a, b);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Psnr, ShapeMismatchThrows) {
  EXPECT_THROW(psnr(Image<double>(4, 4, 3), Image<double>(4, 4, 1)), Error);
}

TEST(Ssim, IdenticalIsExactlyOne) {
  const auto a = random_image(20, 17, 3, 6);
  EXPECT_EQ(ssim(a, a), 1.0);
  EXPECT_EQ(ssim(a.cast<float>(), a.cast<float>()), 1.0f);
}

TEST(Ssim, InvertedImageIsBelowOne) {
  auto a = random_image(16, 16, 3, 7);
  for (auto& v : a.data) {
    if (std::abs(v - 0.5) < 0.05) v = 0.2;
  }
  auto inv = a;
  for (auto& v : inv.data) v = 1.0 - v;
  EXPECT_LT(ssim(a, inv), 1.0);
}

TEST(Ssim, Symmetric) {
  const auto a = random_image(16, 16, 3, 8);
  const auto b = random_image(16, 16, 3, 9);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-9);
}

TEST(Ssim, MatchesBruteForceWindowing) {
  const auto a = random_image(19, 14, 3, 10);
  auto b = a;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& v : b.data) v += n(rng);
  EXPECT_NEAR(ssim(a, b), ssim_brute_force(a, b), 1e-12);
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
  const auto a = random_image(16, 16, 3, 12);
  auto b = random_image(16, 16, 3, 13);
  const auto g = ssim_with_gradient(a, b);
  EXPECT_NEAR(g.value, ssim(a, b), 1e-15);
  auto f = [&] { return (1.0 - ssim(a, b)) / 2.0; };
  // Border pixels carry gradients near 1e-9, so the step must stay well above roundoff.
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    const double numeric = test::central_difference(f, b.data[i], 1e-4);
    const double analytic = -g.d_b.data[i] / 2.0;
    EXPECT_LT(test::relative_error(analytic, numeric, 1e-8), 1e-4) << i;
  }
}

TEST(Ssim, SmallerThanWindowThrows) {
  const auto a = random_image(10, 20, 3, 14);
  EXPECT_THROW(ssim(a, a), Error);
}

TEST(Miou, Identities) {
  const Mask a = mask_from(4, 4, {{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  const Mask b = mask_from(4, 4, {{0, 3}, {1, 3}});
  const Mask empty(4, 4, 1, 0);
  EXPECT_EQ(miou(std::vector<Mask>{a}, std::vector<Mask>{a}), 1.0);
  EXPECT_EQ(miou(std::vector<Mask>{a}, std::vector<Mask>{b}), 0.0);
  EXPECT_EQ(miou(std::vector<Mask>{empty}, std::vector<Mask>{empty}), 1.0);
}

TEST(Miou, HalfOverlapIsExactlyOneThird) {
  // Two masks of area 2A overlapping on A.
  const Mask a = mask_from(4, 1, {{0, 0}, {1, 0}});
  const Mask b = mask_from(4, 1, {{1, 0}, {2, 0}});
  EXPECT_EQ(miou(std::vector<Mask>{a}, std::vector<Mask>{b}), 1.0 / 3.0);
  const Mask c = mask_from(8, 2, {{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  const Mask d = mask_from(8, 2, {{2, 0}, {3, 0}, {4, 0}, {5, 0}});
  EXPECT_EQ(miou(std::vector<Mask>{a, c}, std::vector<Mask>{b, d}), 1.0 / 3.0);
}

TEST(Miou, ShapeMismatchThrows) {
  EXPECT_THROW(iou(Mask(4, 4, 1), Mask(4, 3, 1)), Error);
  EXPECT_THROW(miou(std::vector<Mask>{Mask(2, 2, 1)}, std::vector<Mask>{}), Error);
}

TEST(Localization, MaskAsRelevancyIsCorrect) {
  const Mask gt = mask_from(5, 5, {{2, 2}, {3, 2}});
  Image<float> map(5, 5, 1, 0.0f);
  for (std::size_t i = 0; i < gt.data.size(); ++i) map.data[i] = gt.data[i];
  const auto r = localization_accuracy(std::vector<Image<float>>{map}, std::vector<Mask>{gt});
  EXPECT_EQ(r.evaluated, 1);
  EXPECT_EQ(r.correct, 1);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Localization, PeakOutsideMaskIsIncorrect) {
  const Mask gt = mask_from(5, 5, {{2, 2}});
  Image<float> map(5, 5, 1, 0.1f);
  map.at(0, 4) = 0.9f;
  const auto r = localization_accuracy(std::vector<Image<float>>{map}, std::vector<Mask>{gt});
  EXPECT_EQ(r.correct, 0);
  EXPECT_EQ(r.accuracy, 0.0);
}

TEST(Localization, HandEnumeratedSuite) {
  // q0 hit, q1 miss, q2 empty mask (skipped), q3 tie resolved to the first pixel (hit).
  std::vector<Mask> gt = {mask_from(3, 3, {{1, 1}}), mask_from(3, 3, {{0, 0}}), Mask(3, 3, 1, 0),
                          mask_from(3, 3, {{0, 0}})};
  std::vector<Image<float>> maps(4, Image<float>(3, 3, 1, 0.0f));
  maps[0].at(1, 1) = 1.0f;
  maps[1].at(2, 2) = 1.0f;
  maps[2].at(1, 1) = 1.0f;
  maps[3].at(0, 0) = 0.5f;
  maps[3].at(2, 1) = 0.5f;
  const auto r = localization_accuracy(maps, gt);
  EXPECT_EQ(r.evaluated, 3);
  EXPECT_EQ(r.correct, 2);
  EXPECT_EQ(r.skipped, std::vector<int>{2});
  EXPECT_DOUBLE_EQ(r.accuracy, 2.0 / 3.0);
}

TEST(LabelMask, SelectsExactLabel) {
  LabelMap labels(3, 1, 1);
  labels.data = {0, 2, 2};
  const Mask m = label_mask(labels, 2);
  EXPECT_EQ(m.data, (std::vector<std::uint8_t>{0, 1, 1}));
}
