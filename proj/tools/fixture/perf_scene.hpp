#pragma once

#include <cstdint>

#include "semsplat/dataset.hpp"
#include "semsplat/scene.hpp"

namespace semsplat::fixture {

/// `count` small Gaussians (1-3 px footprint at 256x256) filling a slab in
/// front of perf_camera(), with 3 classes and SH degree 1.
Scene<float> make_perf_scene(int count, std::uint64_t seed);

/// Camera at z = -4 looking at the origin; focal length scales with `size`
/// so every resolution sees the same field of view.
Camera perf_camera(int size);

/// One-frame dataset whose target is `truth` rendered at `size`, with
/// labels from its semantic head; for timing training steps.
Dataset make_perf_dataset(const Scene<float>& truth, int size);

/// Median wall time of `steps` training iterations (densification off)
/// starting from `init` on `dataset`, after one warm-up step.
double median_step_ms(const Dataset& dataset, const Scene<float>& init, int steps);

}  // namespace semsplat::fixture
