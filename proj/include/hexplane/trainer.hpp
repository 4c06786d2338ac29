#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hexplane/dataset.hpp"
#include "hexplane/model.hpp"

namespace hexplane {

struct TrainConfig {
  int batch_rays = 4096;
  std::int64_t total_iters = 25000;
  double lr_grid = 0.02;
  double lr_dense = 0.001;
  /// lr_end / lr0 of the exponential decay.
  double lr_decay_ratio = 0.1;
  double tv_spatial = 0.0005;
  double tv_temporal = 0.001;
  std::vector<std::int64_t> upsample_iters;
  std::vector<GridResolution> upsample_resolutions;
  std::vector<std::int64_t> voxel_iters;
  int voxel_res = 64;
  int voxel_time_samples = 20;
  // a ray skipping 2 units of sub-threshold density loses at most ~1% transmittance
  double voxel_threshold = 0.005;
  bool jitter = true;
  std::int64_t log_every = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  bool deterministic = true;
  std::int64_t checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

struct TrainLogRow {
  std::int64_t iteration = 0;
  double loss = 0.0;
  double psnr = 0.0;
  double seconds = 0.0;
  std::size_t plane_params = 0;
  std::size_t basis_params = 0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;

  /// CSV with header iteration,loss,psnr,seconds,plane_params,basis_params.
  std::string to_csv(bool include_seconds = true) const;
  void save(const std::filesystem::path& path) const;
};

enum class TrainEventKind { BeforeUpsample, AfterUpsample, VoxelBuilt, Logged };

struct TrainEvent {
  TrainEventKind kind;
  std::int64_t iteration;
};

using TrainObserver = std::function<void(const TrainEvent&, Model&)>;

/// Optimizes the model on the frames of `data`. Throws DivergenceError if
/// the loss becomes non-finite.
TrainLog train(Model& model, const Dataset& data, const TrainConfig& config, const TrainObserver& observer = {});

struct ImageScore {
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalResult {
  std::vector<ImageScore> images;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  RenderStats stats;
};

/// Renders every frame of `data` and scores it against its image.
EvalResult evaluate(const Model& model, const Dataset& data, const RenderSettings& settings);

}  // namespace hexplane
