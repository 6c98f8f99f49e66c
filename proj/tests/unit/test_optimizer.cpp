#include <gtest/gtest.h>

#include <cmath>

#include "semsplat/densify.hpp"
#include "semsplat/error.hpp"
#include "semsplat/optimizer.hpp"
#include "test_scenes.hpp"

using namespace semsplat;

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<double> p = {1.0, -2.0, 3.5};
  const std::vector<double> g(3, 0.0);
  AdamMoments<double> st;
  for (int i = 0; i < 5; ++i) adam_step<double>(p, g, st, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.5}));
}

TEST(Adam, FirstStepMatchesHandComputation) {
  const double lr = 0.01;
  std::vector<double> p = {0.5, 0.5, 0.5};
  const std::vector<double> g = {2.0, -0.003, 1e-7};
  AdamMoments<double> st;
  adam_step<double>(p, g, st, lr);
  for (int i = 0; i < 3; ++i) {
    // m_hat = g, v_hat = g^2 after bias correction.
    const double m_hat = (0.1 * g[i]) / (1 - 0.9);
    const double v_hat = (0.001 * g[i] * g[i]) / (1 - 0.999);
    const double expected = 0.5 - lr * m_hat / (std::sqrt(v_hat) + 1e-15);
    EXPECT_NEAR(p[i], expected, 1e-15);
    EXPECT_NEAR(std::abs(p[i] - 0.5), lr, lr * 1e-6);
  }
  EXPECT_LT(p[0], 0.5);
  EXPECT_GT(p[1], 0.5);
}

TEST(Adam, ConvergesOnScalarQuadratic) {
  // f(x) = 3 (x - 1.7)^2
  std::vector<double> x = {-4.0};
  AdamMoments<double> st;
  for (int step = 0; step < 2000; ++step) {
    const std::vector<double> g = {6.0 * (x[0] - 1.7)};
    adam_step<double>(x, g, st, 0.05);
  }
  EXPECT_NEAR(x[0], 1.7, 1e-6);
}

TEST(Adam, SizeMismatchThrows) {
  std::vector<double> p(3);
  std::vector<double> g(2);
  AdamMoments<double> st;
  EXPECT_THROW(adam_step<double>(p, g, st, 0.1), Error);
}

TEST(LearningRates, PositionDecayIsLogLinear) {
  LearningRates lr;
  EXPECT_DOUBLE_EQ(lr.means_at(0), lr.means_init);
  EXPECT_NEAR(lr.means_at(lr.means_decay_steps), lr.means_final, 1e-18);
  EXPECT_NEAR(lr.means_at(lr.means_decay_steps / 2), std::sqrt(lr.means_init * lr.means_final),
              1e-15);
  EXPECT_NEAR(lr.means_at(10 * lr.means_decay_steps), lr.means_final, 1e-18);
  lr.opacity = 0;
  EXPECT_THROW(lr.validate(), Error);
}

TEST(SceneOptimizer, StepRenormalizesQuaternions) {
  auto scene = test::random_scene<double>(1, {.count = 4});
  SceneOptimizer<double> opt(scene, LearningRates{});
  GradientBuffer<double> grads(scene);
  for (auto& v : grads.gaussians.rotations) v = 1.0;
  opt.step(scene, grads, 1);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(scene.gaussians.rotation(i).norm(), 1.0, 1e-12);
}

TEST(SceneOptimizer, ShBandsUseSeparateRates) {
  auto scene = test::random_scene<double>(2, {.count = 1, .sh_degree = 1});
  const auto before = scene.gaussians.sh;
  LearningRates lr;
  SceneOptimizer<double> opt(scene, lr);
  GradientBuffer<double> grads(scene);
  for (auto& v : grads.gaussians.sh) v = 1.0;
  opt.step(scene, grads, 1);
  for (std::size_t k = 0; k < before.size(); ++k) {
    const double expected = k < 3 ? lr.sh_dc : lr.sh_rest;
    EXPECT_NEAR(before[k] - scene.gaussians.sh[k], expected, expected * 1e-9) << k;
  }
}

TEST(SceneOptimizer, MismatchedRowsThrow) {
  auto scene = test::random_scene<double>(3, {.count = 3});
  SceneOptimizer<double> opt(scene, LearningRates{});
  scene.gaussians.push_back(scene.gaussians.row(0));
  GradientBuffer<double> grads(scene);
  EXPECT_THROW(opt.step(scene, grads, 1), Error);
  opt.append_rows(scene);
  EXPECT_NO_THROW(opt.step(scene, grads, 1));
}

namespace {

struct DensifyFixture {
  Scene<double> scene = test::random_scene<double>(9, {.count = 3});
  SceneOptimizer<double> opt{scene, LearningRates{}};
  DensifyStats stats;

  DensifyFixture() {
    // Give every row distinct optimizer history.
    GradientBuffer<double> grads(scene);
    for (ParamGroup g : kParamGroups) {
      auto& v = grads.gaussians.group(g);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * (i + 1);
    }
    opt.step(scene, grads, 1);
    stats.resize(3);
  }
};

}  // namespace

TEST(Densify, BelowThresholdOnlyPrunes) {
  DensifyFixture f;
  f.scene.gaussians.opacity_logits[1] = logit(0.001);
  f.stats.grad_sum = {1e-5, 1e-5, 1e-5};
  f.stats.count = {1, 1, 1};
  std::mt19937_64 rng(1);
  const auto r = densify_and_prune(f.scene, f.opt, f.stats, DensifyConfig{}, 1.0, rng);
  EXPECT_EQ(r.cloned, 0);
  EXPECT_EQ(r.split, 0);
  EXPECT_EQ(r.pruned, 1);
  EXPECT_EQ(f.scene.gaussians.size(), 2u);
  EXPECT_EQ(f.opt.rows(), 2u);
}

TEST(Densify, SingleSmallHighGradientGaussianIsCloned) {
  DensifyFixture f;
  const auto source = f.scene.gaussians.row(2);
  f.stats.grad_sum = {0.0, 0.0, 1e-2};
  f.stats.count = {1, 1, 2};
  DensifyConfig cfg;
  std::mt19937_64 rng(1);
  // Largest scale exp(-1.2) ~ 0.3 is below 0.01 * extent.
  const auto r = densify_and_prune(f.scene, f.opt, f.stats, cfg, 100.0, rng);
  EXPECT_EQ(r.cloned, 1);
  EXPECT_EQ(r.split, 0);
  ASSERT_EQ(f.scene.gaussians.size(), 4u);
  const auto clone = f.scene.gaussians.row(3);
  EXPECT_EQ(clone.semantic, source.semantic);
  EXPECT_EQ(clone.mean, source.mean);
  EXPECT_EQ(clone.sh, source.sh);
  // New optimizer rows start from zero moments; existing rows keep theirs.
  const auto& m = f.opt.moments(ParamGroup::kSemantics).m;
  ASSERT_EQ(m.size(), 12u);
  for (int k = 9; k < 12; ++k) EXPECT_EQ(m[k], 0.0);
  for (int k = 0; k < 9; ++k) EXPECT_NE(m[k], 0.0);
  EXPECT_EQ(f.stats.grad_sum.size(), 4u);
  for (double s : f.stats.grad_sum) EXPECT_EQ(s, 0.0);
}

TEST(Densify, LargeHighGradientGaussianIsSplit) {
  DensifyFixture f;
  const auto source = f.scene.gaussians.row(0);
  f.stats.grad_sum = {1e-2, 0.0, 0.0};
  f.stats.count = {1, 1, 1};
  DensifyConfig cfg;
  std::mt19937_64 rng(1);
  const auto r = densify_and_prune(f.scene, f.opt, f.stats, cfg, 1.0, rng);
  EXPECT_EQ(r.split, 1);
  ASSERT_EQ(f.scene.gaussians.size(), 4u);
  EXPECT_EQ(f.opt.rows(), 4u);
  // Source removed, two children appended with shrunk scales and the same code.
  for (std::size_t i = 2; i < 4; ++i) {
    const auto child = f.scene.gaussians.row(i);
    EXPECT_EQ(child.semantic, source.semantic);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(child.log_scale[k], source.log_scale[k] - std::log(1.6), 1e-12);
    }
  }
  // Coverage sanity: summed footprint area (volume^(2/3)) within 2x of the source.
  auto area = [](const Vec3<double>& log_scale) { return std::exp(2.0 * log_scale.sum() / 3.0); };
  const double child_area = area(f.scene.gaussians.log_scale(2)) + area(f.scene.gaussians.log_scale(3));
  EXPECT_LT(child_area, 2.0 * area(source.log_scale));
  EXPECT_GT(child_area, 0.5 * area(source.log_scale));
}

TEST(Densify, PruneRemovesOnlyTransparentAndCompactsState) {
  DensifyFixture f;
  f.scene.gaussians.opacity_logits[0] = logit(0.001);
  f.scene.gaussians.opacity_logits[2] = logit(0.005);
  const double kept_moment = f.opt.moments(ParamGroup::kOpacity).m[1];
  const int removed = prune_transparent(f.scene, &f.opt, &f.stats, 0.005);
  EXPECT_EQ(removed, 1);
  ASSERT_EQ(f.scene.gaussians.size(), 2u);
  EXPECT_EQ(f.opt.moments(ParamGroup::kOpacity).m.size(), 2u);
  EXPECT_EQ(f.opt.moments(ParamGroup::kOpacity).m[0], kept_moment);
  EXPECT_GE(f.scene.gaussians.opacity(1), 0.005 - 1e-12);
}

TEST(Densify, OpacityResetCapsAndClearsMoments) {
  DensifyFixture f;
  reset_opacity(f.scene, f.opt, 0.01);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(f.scene.gaussians.opacity(i), 0.01 + 1e-12);
  for (double m : f.opt.moments(ParamGroup::kOpacity).m) EXPECT_EQ(m, 0.0);
}

TEST(Densify, StatsAccumulateOnlyVisible) {
  auto scene = test::random_scene<double>(4, {.count = 2});
  GradientBuffer<double> grads(scene);
  grads.visible = {1, 0};
  grads.viewspace_grad = {0.5, 0.7};
  DensifyStats stats;
  stats.accumulate(grads);
  stats.accumulate(grads);
  EXPECT_EQ(stats.grad_sum, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(stats.count, (std::vector<int>{2, 0}));
}
