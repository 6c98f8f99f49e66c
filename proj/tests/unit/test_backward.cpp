#include <gtest/gtest.h>

#include <random>

#include "gradient_check.hpp"
#include "semsplat/backward.hpp"

using namespace semsplat;

TEST(Backward, ZeroUpstreamGivesZeroBuffer) {
  const auto scene = test::random_scene<double>(3);
  const Camera cam = test::front_camera(24, 24);
  const Image<double> zero_color(24, 24, 3, 0.0);
  const Image<double> zero_feature(24, 24, 3, 0.0);
  const auto grads = backward_render<double>(scene, cam, &zero_color, &zero_feature);
  EXPECT_TRUE(grads.all_zero());
  const auto none = backward_render<double>(scene, cam, nullptr, nullptr);
  EXPECT_TRUE(none.all_zero());
}

TEST(Backward, BufferMirrorsSceneShape) {
  const auto scene = test::random_scene<double>(5, {.count = 7, .sh_degree = 2});
  GradientBuffer<double> grads(scene);
  for (ParamGroup g : kParamGroups) {
    EXPECT_EQ(grads.gaussians.group(g).size(), scene.gaussians.group(g).size());
  }
  EXPECT_EQ(grads.head.weight.size(), scene.head.weight.size());
  EXPECT_EQ(grads.viewspace_grad.size(), 7u);
}

TEST(Backward, SingleGaussianColorOpacityDerivative) {
  test::RandomSceneOptions opts;
  opts.count = 1;
  opts.spread = 0.2;
  opts.min_log_scale = -1.0;
  opts.max_log_scale = -0.8;
  auto scene = test::random_scene<double>(17, opts);
  const Camera cam = test::front_camera(16, 16, 2.0);
  const RasterConfig cfg = RasterConfig::exact();

  // Sum of all color channels: upstream gradient of ones.
  const Image<double> ones(16, 16, 3, 1.0);
  const auto grads = backward_render<double>(scene, cam, &ones, nullptr, cfg);
  auto f = [&] {
    const auto out = render(scene, cam, cfg);
    double s = 0.0;
    for (double v : out.color.data) s += v;
    return s;
  };
  const double numeric = test::central_difference(f, scene.gaussians.opacity_logits[0], 1e-6);
  const double analytic = grads.gaussians.opacity_logits[0];
  EXPECT_GT(std::abs(numeric), 1e-3);
  EXPECT_LT(test::relative_error(analytic, numeric), 1e-3);
}

TEST(Backward, FullLossMatchesFiniteDifferencesEveryGroup) {
  const auto problem = test::random_loss_problem(21, 5, 16, 1);
  const auto report = test::check_loss_gradients(problem);
  for (const char* g : {"means", "rotations", "log_scales", "opacity", "sh", "semantics",
                        "head_weight", "head_bias"}) {
    EXPECT_TRUE(report.covers(g)) << g;
  }
  for (const auto& c : report.coords) {
    EXPECT_LT(c.rel_error, 1e-3) << c.group << "[" << c.index << "] analytic " << c.analytic
                                 << " numeric " << c.numeric;
  }
}

TEST(Backward, HigherShDegreesAndMoreGaussians) {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const auto problem = test::random_loss_problem(seed, 10, 16, 3);
    const auto report = test::check_loss_gradients(problem);
    EXPECT_GE(report.fraction_below(1e-3), 0.99) << "seed " << seed;
    EXPECT_LT(report.max_rel_error(), 1e-2) << "seed " << seed;
  }
}

TEST(Backward, ViewspaceGradientTracksVisibleGaussians) {
  auto problem = test::random_loss_problem(41, 6, 16, 0);
  // Push one Gaussian behind the camera.
  problem.scene.gaussians.mean(2)[2] = -10.0;
  GradientBuffer<double> grads(problem.scene);
  loss_and_gradients(problem.scene, problem.camera, problem.target, &problem.labels,
                     problem.loss, problem.raster, grads);
  EXPECT_FALSE(grads.visible[2]);
  EXPECT_EQ(grads.viewspace_grad[2], 0.0);
  for (std::size_t i = 0; i < 6; ++i) {
    if (i == 2) continue;
    EXPECT_TRUE(grads.visible[i]);
    EXPECT_GT(grads.viewspace_grad[i], 0.0);
  }
}

TEST(Backward, FloatPathAgreesWithDouble) {
  const auto problem = test::random_loss_problem(51, 5, 16, 1);
  GradientBuffer<double> gd(problem.scene);
  loss_and_gradients(problem.scene, problem.camera, problem.target, &problem.labels,
                     problem.loss, problem.raster, gd);
  const auto scene_f = problem.scene.cast<float>();
  GradientBuffer<float> gf(scene_f);
  loss_and_gradients(scene_f, problem.camera, problem.target.cast<float>(), &problem.labels,
                     problem.loss, problem.raster, gf);
  for (ParamGroup g : kParamGroups) {
    const auto& a = gd.gaussians.group(g);
    const auto& b = gf.gaussians.group(g);
    double scale = 1e-3;
    for (double v : a) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-3 * scale) << param_group_name(g) << "[" << i << "]";
    }
  }
}
