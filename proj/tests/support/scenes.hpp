#pragma once

// In-memory synthetic datasets for tests that don't need files on disk.

#include <numbers>

#include "hexplane/dataset.hpp"
#include "hexplane/model.hpp"
#include "hexplane/scene.hpp"

namespace hexplane::fixtures {

inline Dataset make_dataset(const SyntheticConfig& config, std::uint64_t stream = 0) {
  const AnalyticScene scene = AnalyticScene::make(config.scene);
  const double angle_x = config.fov_degrees * std::numbers::pi / 180.0;
  Dataset data;
  data.camera_angle_x = angle_x;
  data.bounds = scene.bounds;
  for (const auto& pose : synthetic_poses(config, config.n_cameras, stream)) {
    for (int k = 0; k < config.n_times; ++k) {
      Frame f;
      f.time = config.n_times == 1 ? 0.0 : static_cast<double>(k) / (config.n_times - 1);
      f.transform = pose;
      f.camera = Camera::from_fov(config.width, config.height, angle_x, pose);
      f.image = quantize8(render_analytic(scene, f.camera, f.time, config.gt_samples));
      data.frames.push_back(std::move(f));
    }
  }
  return data;
}

// Small model over the scene box, sized for unit-test budgets.
inline ModelConfig small_model(const AxisDomain& domain) {
  ModelConfig c;
  c.domain = domain;
  c.resolution = {12, 12, 12, 6};
  c.opacity_ranks = {4, 4, 4};
  c.appearance_ranks = {4, 4, 4};
  c.feature_dim = 12;
  c.mlp_hidden = 32;
  c.n_samples = 24;
  return c;
}

inline TrainConfig short_schedule(std::int64_t iters, std::uint64_t seed) {
  TrainConfig t;
  t.batch_rays = 256;
  t.total_iters = iters;
  t.log_every = std::max<std::int64_t>(1, iters / 10);
  t.seed = seed;
  t.voxel_res = 16;
  t.voxel_time_samples = 4;
  return t;
}

}  // namespace hexplane::fixtures
