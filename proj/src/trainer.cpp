#include "hexplane/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "hexplane/checkpoint.hpp"
#include "hexplane/loss.hpp"
#include "hexplane/metrics.hpp"
#include "hexplane/parallel.hpp"

namespace hexplane {

void TrainConfig::validate() const {
  if (batch_rays < 1) throw ConfigError("batch_rays must be positive");
  if (total_iters < 0) throw ConfigError("total_iters must be non-negative");
  if (lr_grid < 0.0 || lr_dense < 0.0) throw ConfigError("learning rates must be non-negative");
  if (!(lr_decay_ratio > 0.0)) throw ConfigError("lr_decay_ratio must be positive");
  if (tv_spatial < 0.0 || tv_temporal < 0.0) throw ConfigError("TV weights must be non-negative");
  auto check_milestones = [&](const std::vector<std::int64_t>& its, const char* what) {
    for (std::size_t i = 0; i < its.size(); ++i) {
      if (its[i] < 0 || its[i] >= std::max<std::int64_t>(total_iters, 1)) {
        throw ConfigError(std::string(what) + " milestones must lie in [0, total_iters)");
      }
      if (i > 0 && its[i] <= its[i - 1]) throw ConfigError(std::string(what) + " milestones must strictly increase");
    }
  };
  if (total_iters > 0) {
    check_milestones(upsample_iters, "upsample");
    check_milestones(voxel_iters, "voxel");
  }
  if (upsample_iters.size() != upsample_resolutions.size()) {
    throw ConfigError("need one target resolution per upsample milestone");
  }
  if (voxel_res < 2 || voxel_time_samples < 1) throw ConfigError("bad emptiness voxel settings");
  if (log_every < 1) throw ConfigError("log_every must be positive");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
}

std::string TrainLog::to_csv(bool include_seconds) const {
  std::ostringstream os;
  os << "iteration,loss,psnr";
  if (include_seconds) os << ",seconds";
  os << ",plane_params,basis_params\n";
  os << std::setprecision(9);
  for (const auto& r : rows) {
    os << r.iteration << ',' << r.loss << ',' << r.psnr;
    if (include_seconds) os << ',' << std::fixed << std::setprecision(3) << r.seconds << std::defaultfloat << std::setprecision(9);
    os << ',' << r.plane_params << ',' << r.basis_params << '\n';
  }
  return os.str();
}

void TrainLog::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << to_csv();
  if (!os) throw IoError("failed writing " + path.string());
}

namespace {

std::vector<double> slab_lrs(const ParamStore& params, const TrainConfig& config, std::int64_t iter) {
  const double grid = decayed_lr(config.lr_grid, config.lr_decay_ratio, iter, config.total_iters);
  const double dense = decayed_lr(config.lr_dense, config.lr_decay_ratio, iter, config.total_iters);
  std::vector<double> lrs;
  for (const auto& s : params.slabs()) lrs.push_back(s.group == ParamGroup::Grid ? grid : dense);
  return lrs;
}

void save_checkpoint(const std::filesystem::path& dir, const Model& model, const ParamStore& params,
                     const AdamState& adam) {
  save_model(dir, model);
  save_slabs(dir / "optimizer.hexs", adam.to_slabs(params));
}

}  // namespace

TrainLog train(Model& model, const Dataset& data, const TrainConfig& config, const TrainObserver& observer) {
  config.validate();
  if (data.frames.empty()) throw ConfigError("training needs at least one frame");
  TrainLog log;
  if (config.total_iters == 0) return log;

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_frame(0, data.frames.size() - 1);

  ParamStore params = model.params();
  GradStore grads(params);
  AdamState adam(params);
  RenderSettings settings = model.render_settings(config.threads);
  settings.sampling.jitter = config.jitter;
  settings.sampling.seed = config.seed;
  settings.deterministic = config.deterministic;

  const auto start = std::chrono::steady_clock::now();
  std::size_t next_up = 0;
  std::size_t next_voxel = 0;
  double loss_acc = 0.0;
  double mse_acc = 0.0;
  std::int64_t acc_count = 0;
  std::vector<Eigen::Vector3d> gt(static_cast<std::size_t>(config.batch_rays));

  for (std::int64_t it = 0; it < config.total_iters; ++it) {
    if (next_up < config.upsample_iters.size() && config.upsample_iters[next_up] == it) {
      if (observer) observer({TrainEventKind::BeforeUpsample, it}, model);
      model.upsample(config.upsample_resolutions[next_up]);
      ParamStore fresh = model.params();
      for (std::size_t s = 0; s < fresh.size(); ++s) {
        if (fresh.slabs()[s].values.size() != adam.m[s].size()) adam.reset_slab(s, fresh.slabs()[s].values.size());
      }
      params = std::move(fresh);
      grads = GradStore(params);
      ++next_up;
      if (observer) observer({TrainEventKind::AfterUpsample, it}, model);
    }
    if (next_voxel < config.voxel_iters.size() && config.voxel_iters[next_voxel] == it) {
      model.voxel() = build_emptiness_voxel(model.opacity(), settings.density_shift, config.voxel_res,
                                            config.voxel_time_samples, config.voxel_threshold, config.threads);
      ++next_voxel;
      if (observer) observer({TrainEventKind::VoxelBuilt, it}, model);
    }

    // Uniform random (frame, pixel) batch.
    RayBatch rays;
    rays.origins.reserve(gt.size());
    rays.directions.reserve(gt.size());
    rays.times.reserve(gt.size());
    for (std::size_t r = 0; r < gt.size(); ++r) {
      const Frame& f = data.frames[pick_frame(rng)];
      std::uniform_int_distribution<std::size_t> pick_pixel(0, f.image.pixels() - 1);
      const std::size_t px = pick_pixel(rng);
      const int x = static_cast<int>(px % static_cast<std::size_t>(f.image.width));
      const int y = static_cast<int>(px / static_cast<std::size_t>(f.image.width));
      rays.push(f.camera.cam_to_world.block<3, 1>(0, 3), pixel_direction(f.camera, x, y), f.time);
      gt[r] = f.image.pixel(px);
    }
    if (model.config().coords == CoordSystem::NDC) rays = ndc_transform(rays, model.config().ndc);

    grads.zero();
    RenderGrads split = model.split(grads);
    const std::size_t n = gt.size();
    const RenderOutput out = render_rays_backward(
        model.view(), rays, settings,
        [&](std::size_t i, const Eigen::Vector3d& rgb) { return photometric_grad(rgb, gt[i], n); }, split,
        static_cast<std::uint64_t>(it) * n);
    const double photo = photometric_loss(out.rgb, gt);
    auto all = grads.spans(0, grads.size());
    const double tv = tv_loss(params.slabs(), config.tv_spatial, config.tv_temporal, all);
    const double loss = photo + tv;
    if (!std::isfinite(loss)) {
      throw DivergenceError("loss became non-finite at iteration " + std::to_string(it));
    }
    const auto lrs = slab_lrs(params, config, it);
    adam_step(params, grads, adam, lrs);

    loss_acc += loss;
    mse_acc += photo;
    ++acc_count;
    const std::int64_t done = it + 1;
    if (done % config.log_every == 0 || done == config.total_iters) {
      TrainLogRow row;
      row.iteration = done;
      row.loss = loss_acc / static_cast<double>(acc_count);
      row.psnr = psnr_from_mse(mse_acc / static_cast<double>(acc_count));
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const ParamCount a = model.opacity().param_count();
      const ParamCount b = model.appearance().param_count();
      row.plane_params = a.plane_params + b.plane_params;
      row.basis_params = a.basis_params + b.basis_params;
      log.rows.push_back(row);
      loss_acc = mse_acc = 0.0;
      acc_count = 0;
      if (observer) observer({TrainEventKind::Logged, done}, model);
    }
    if (config.checkpoint_every > 0 && done % config.checkpoint_every == 0 && !config.checkpoint_dir.empty()) {
      save_checkpoint(config.checkpoint_dir, model, params, adam);
    }
  }
  return log;
}

EvalResult evaluate(const Model& model, const Dataset& data, const RenderSettings& settings) {
  EvalResult r;
  for (const auto& f : data.frames) {
    RenderStats stats;
    const Image img = render_image(model, f.camera, f.time, settings, nullptr, &stats);
    r.stats += stats;
    ImageScore s;
    s.psnr = psnr(img, f.image);
    s.ssim = std::min(f.image.width, f.image.height) >= 11 ? ssim(img, f.image) : 1.0;
    r.images.push_back(s);
    r.mean_psnr += s.psnr;
    r.mean_ssim += s.ssim;
  }
  if (!r.images.empty()) {
    r.mean_psnr /= static_cast<double>(r.images.size());
    r.mean_ssim /= static_cast<double>(r.images.size());
  }
  return r;
}

}  // namespace hexplane
