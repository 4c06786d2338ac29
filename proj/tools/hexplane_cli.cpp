// hexplane: dataset generation, training, rendering, evaluation and ablations.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hexplane/dataset.hpp"
#include "hexplane/metrics.hpp"
#include "hexplane/model.hpp"
#include "hexplane/run_config.hpp"
#include "hexplane/scene.hpp"
#include "hexplane/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hexplane;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDivergence = 4;

// Files written under --out, recorded in manifest.json.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw IoError("cannot create " + root_.string() + ": " + ec.message());
  }

  const fs::path& root() const { return root_; }
  fs::path path(const std::string& rel) const { return root_ / rel; }

  void add(const std::string& rel) { files_.push_back(rel); }

  void write_text(const std::string& rel, const std::string& text) {
    std::ofstream os(path(rel), std::ios::trunc | std::ios::binary);
    if (!os) throw IoError("cannot write " + path(rel).string());
    os << text;
    if (!os) throw IoError("failed writing " + path(rel).string());
    add(rel);
  }

  void finish(const std::string& command) {
    json files = json::array();
    for (const auto& rel : files_) {
      std::error_code ec;
      const auto p = path(rel);
      if (fs::is_directory(p)) {
        for (const auto& e : fs::recursive_directory_iterator(p)) {
          if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root_).generic_string());
        }
      } else {
        files.push_back(rel);
      }
    }
    json doc{{"command", command}, {"files", files}};
    std::ofstream os(path("manifest.json"), std::ios::trunc);
    if (!os) throw IoError("cannot write manifest in " + root_.string());
    os << doc.dump(2) << '\n';
  }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

struct RunFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
  std::int64_t iters = -1;
  CLI::Option* seed_opt = nullptr;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool need_out = true) {
  cmd->add_option("--config", f.config, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "Override a config value, e.g. --set train.lr_grid=0.01")->allow_extra_args(false);
  cmd->add_option("--dataset", f.dataset, "Dataset root (overrides config)");
  auto* out = cmd->add_option("--out", f.out, "Output directory");
  if (need_out) out->required();
  f.seed_opt = cmd->add_option("--seed", f.seed, "Random seed (overrides config)");
  cmd->add_option("--threads", f.threads, "Worker thread cap (overrides config)")->check(CLI::PositiveNumber);
  cmd->add_option("--iters", f.iters, "Training iterations (overrides config)")->check(CLI::NonNegativeNumber);
}

// File, then --set overrides, then dedicated flags.
RunConfig resolve_run_config(const RunFlags& f) {
  const json schema = run_config_to_json(RunConfig{});
  json doc = f.config.empty() ? json::object() : read_config_file(f.config);
  for (const auto& s : f.sets) apply_override(doc, s, schema);
  if (!f.dataset.empty()) doc["dataset"] = f.dataset;
  if (!f.out.empty()) doc["out"] = f.out;
  if (f.seed_opt && f.seed_opt->count() > 0) doc["seed"] = f.seed;
  if (f.threads > 0) doc["threads"] = f.threads;
  if (f.iters >= 0) {
    doc["train"]["total_iters"] = f.iters;
    // Milestones past a shortened run are dropped.
    for (const char* pair : {"upsample", "voxel"}) {
      const std::string key = std::string(pair) + "_iters";
      json base = doc["train"].contains(key) ? doc["train"][key] : train_config_to_json(TrainConfig{})[key];
      json kept = json::array();
      json kept_res = json::array();
      for (std::size_t i = 0; i < base.size(); ++i) {
        if (base[i].get<std::int64_t>() < f.iters) {
          kept.push_back(base[i]);
          if (std::string(pair) == "upsample" && doc["train"].contains("upsample_resolutions")) {
            kept_res.push_back(doc["train"]["upsample_resolutions"][i]);
          }
        }
      }
      doc["train"][key] = kept;
      if (std::string(pair) == "upsample") doc["train"]["upsample_resolutions"] = kept_res;
    }
  }
  RunConfig rc = run_config_from_json(doc);
  if (rc.dataset.empty()) throw ConfigError("no dataset given (--dataset or \"dataset\" in the config)");
  return rc;
}

void adopt_bounds(ModelConfig& model, const Dataset& data) {
  if (!data.bounds) return;
  model.domain.space_min = data.bounds->space_min;
  model.domain.space_max = data.bounds->space_max;
}

void print_eval(const std::string& title, const EvalResult& r) {
  std::printf("%s\n", title.c_str());
  std::printf("  %-8s %10s %8s\n", "image", "psnr", "ssim");
  for (std::size_t i = 0; i < r.images.size(); ++i) {
    std::printf("  %-8zu %10.3f %8.4f\n", i, r.images[i].psnr, r.images[i].ssim);
  }
  std::printf("  %-8s %10.3f %8.4f\n", "mean", r.mean_psnr, r.mean_ssim);
}

std::string eval_csv(const EvalResult& r, const Dataset& data) {
  std::string s = "image,time,psnr,ssim\n";
  char line[512];
  for (std::size_t i = 0; i < r.images.size(); ++i) {
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f\n", data.frames[i].file_path.c_str(), data.frames[i].time,
                  r.images[i].psnr, r.images[i].ssim);
    s += line;
  }
  std::snprintf(line, sizeof(line), "mean,,%.6f,%.6f\n", r.mean_psnr, r.mean_ssim);
  return s + line;
}

int cmd_gen_synthetic(const SyntheticConfig& config, const std::string& out_dir) {
  OutputDir out(out_dir);
  gen_synthetic(config, out.root());
  for (const char* split : {"train", "val", "test"}) {
    out.add(std::string("transforms_") + split + ".json");
    out.add(split);
  }
  out.finish("gen-synthetic");
  std::printf("wrote %s dataset to %s\n", to_string(config.scene).c_str(), out_dir.c_str());
  return 0;
}

int cmd_train(const RunFlags& flags) {
  RunConfig rc = resolve_run_config(flags);
  if (rc.out.empty()) throw ConfigError("no output directory given");
  const Dataset data = load_dataset(rc.dataset, "train");
  adopt_bounds(rc.model, data);
  OutputDir out(rc.out);
  out.write_text("config.json", run_config_to_json(rc).dump(2) + "\n");
  Model model(rc.model, rc.seed);
  TrainConfig tc = rc.train;
  if (tc.checkpoint_every > 0) tc.checkpoint_dir = out.path("checkpoint");
  const TrainLog log = train(model, data, tc, [&](const TrainEvent& e, Model&) {
    if (e.kind != TrainEventKind::Logged) return;
    std::fprintf(stderr, "iter %lld\n", static_cast<long long>(e.iteration));
  });
  if (tc.checkpoint_every > 0 && fs::exists(out.path("checkpoint"))) out.add("checkpoint");
  save_model(out.path("model"), model);
  out.add("model");
  log.save(out.path("train_log.csv"));
  out.add("train_log.csv");
  out.finish("train");
  if (!log.rows.empty()) {
    const auto& last = log.rows.back();
    std::printf("trained %lld iterations: loss %.6f, train psnr %.3f dB\n", static_cast<long long>(last.iteration),
                last.loss, last.psnr);
  } else {
    std::printf("saved initial model (0 iterations)\n");
  }
  return 0;
}

struct RenderFlags {
  std::string model;
  std::string out;
  std::string dataset;
  std::string split = "test";
  int frames = 0;
  double radius = 4.0;
  double elevation = 30.0;
  double time = -1.0;
  int width = 64;
  int height = 64;
  double fov = 40.0;
  bool depth = false;
  int threads = 1;
  std::uint64_t seed = 0;
};

int cmd_render(const RenderFlags& f) {
  const Model model = load_model(f.model);
  const RenderSettings settings = model.render_settings(f.threads);
  OutputDir out(f.out);
  std::vector<std::pair<Camera, double>> views;
  if (!f.dataset.empty()) {
    const Dataset data = load_dataset(f.dataset, f.split);
    for (const auto& fr : data.frames) views.emplace_back(fr.camera, fr.time);
  } else {
    if (f.frames < 1) throw ConfigError("render needs --frames N (circular trajectory) or --dataset");
    const double deg = std::numbers::pi / 180.0;
    for (int k = 0; k < f.frames; ++k) {
      const double az = 2.0 * std::numbers::pi * k / f.frames;
      const double el = f.elevation * deg;
      const Eigen::Vector3d eye =
          f.radius * Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      // Without --time the trajectory also sweeps time from 0 to 1.
      const double t = f.time >= 0.0 ? f.time : (f.frames == 1 ? 0.0 : static_cast<double>(k) / (f.frames - 1));
      views.emplace_back(Camera::from_fov(f.width, f.height, f.fov * deg, look_at(eye, Eigen::Vector3d::Zero())), t);
    }
  }
  char name[64];
  for (std::size_t i = 0; i < views.size(); ++i) {
    std::vector<double> depth;
    const Image img = render_image(model, views[i].first, views[i].second, settings, f.depth ? &depth : nullptr);
    std::snprintf(name, sizeof(name), "frame_%04zu.png", i);
    write_png(out.path(name), img);
    out.add(name);
    if (f.depth) {
      std::snprintf(name, sizeof(name), "frame_%04zu.dpth", i);
      save_depth(out.path(name), img.width, img.height, depth);
      out.add(name);
    }
  }
  out.finish("render");
  std::printf("rendered %zu frames to %s\n", views.size(), f.out.c_str());
  return 0;
}

int cmd_eval(const std::string& model_dir, const std::string& dataset, const std::string& split,
             const std::string& out_dir, int threads) {
  const Model model = load_model(model_dir);
  const Dataset data = load_dataset(dataset, split);
  const EvalResult r = evaluate(model, data, model.render_settings(threads));
  print_eval("split " + split, r);
  if (!out_dir.empty()) {
    OutputDir out(out_dir);
    out.write_text("metrics.csv", eval_csv(r, data));
    out.finish("eval");
  }
  return 0;
}

int cmd_ablate(const RunFlags& flags, const std::string& axis, const std::string& split) {
  RunConfig rc = resolve_run_config(flags);
  if (rc.out.empty()) throw ConfigError("no output directory given");
  const Dataset train_data = load_dataset(rc.dataset, "train");
  const Dataset eval_data = load_dataset(rc.dataset, split);
  adopt_bounds(rc.model, train_data);
  const auto variants = ablation_variants(axis, rc.model);
  OutputDir out(rc.out);
  std::string csv = "variant,psnr,ssim,plane_params,basis_params\n";
  std::printf("%-24s %10s %8s %14s %14s\n", "variant", "psnr", "ssim", "plane_params", "basis_params");
  char line[512];
  for (const auto& v : variants) {
    Model model(v.model, rc.seed);
    train(model, train_data, rc.train);
    const EvalResult r = evaluate(model, eval_data, model.render_settings(rc.threads));
    const ParamCount a = model.opacity().param_count();
    const ParamCount b = model.appearance().param_count();
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%zu,%zu\n", v.name.c_str(), r.mean_psnr, r.mean_ssim,
                  a.plane_params + b.plane_params, a.basis_params + b.basis_params);
    csv += line;
    std::printf("%-24s %10.3f %8.4f %14zu %14zu\n", v.name.c_str(), r.mean_psnr, r.mean_ssim,
                a.plane_params + b.plane_params, a.basis_params + b.basis_params);
    std::fflush(stdout);
  }
  out.write_text("ablation_" + axis + ".csv", csv);
  out.finish("ablate");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HexPlane dynamic scene fields: generate, train, render, evaluate, ablate"};
  app.require_subcommand(1);

  SyntheticConfig syn;
  std::string syn_scene = "orbiting_sphere";
  std::string syn_out;
  auto* gen = app.add_subcommand("gen-synthetic", "Render an analytic dynamic scene to a dataset");
  gen->add_option("--scene", syn_scene, "orbiting_sphere|merging_spheres|static_sphere|unbounded|empty");
  gen->add_option("--cameras", syn.n_cameras, "Training cameras")->check(CLI::PositiveNumber);
  gen->add_option("--times", syn.n_times, "Timesteps")->check(CLI::PositiveNumber);
  gen->add_option("--width", syn.width, "Image width")->check(CLI::PositiveNumber);
  gen->add_option("--height", syn.height, "Image height")->check(CLI::PositiveNumber);
  gen->add_option("--gt-samples", syn.gt_samples, "Samples per ray for ground truth")->check(CLI::PositiveNumber);
  gen->add_option("--test-cameras", syn.n_test_cameras, "Held-out test cameras")->check(CLI::NonNegativeNumber);
  gen->add_option("--test-times", syn.n_test_times, "Times rendered per test camera")->check(CLI::PositiveNumber);
  gen->add_option("--val-cameras", syn.n_val_cameras, "Validation cameras")->check(CLI::NonNegativeNumber);
  gen->add_option("--distance", syn.camera_distance, "Camera distance from the origin");
  gen->add_option("--fov", syn.fov_degrees, "Horizontal field of view in degrees");
  gen->add_option("--seed", syn.seed, "Random seed");
  gen->add_option("--threads", syn.threads, "Worker thread cap")->check(CLI::PositiveNumber);
  gen->add_option("--out", syn_out, "Output dataset directory")->required();

  RunFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset's train split");
  add_run_flags(train_cmd, train_flags);

  RenderFlags rf;
  auto* render = app.add_subcommand("render", "Render frames from a trained model");
  render->add_option("--model", rf.model, "Model directory")->required()->check(CLI::ExistingDirectory);
  render->add_option("--out", rf.out, "Output directory")->required();
  render->add_option("--dataset", rf.dataset, "Render the cameras of a dataset split instead of a trajectory");
  render->add_option("--split", rf.split, "Dataset split for --dataset");
  render->add_option("--frames", rf.frames, "Frames of the circular trajectory")->check(CLI::PositiveNumber);
  render->add_option("--radius", rf.radius, "Trajectory radius");
  render->add_option("--elevation", rf.elevation, "Trajectory elevation in degrees");
  render->add_option("--time", rf.time, "Fixed time in [0,1]; default sweeps 0..1 along the trajectory");
  render->add_option("--width", rf.width, "Image width")->check(CLI::PositiveNumber);
  render->add_option("--height", rf.height, "Image height")->check(CLI::PositiveNumber);
  render->add_option("--fov", rf.fov, "Horizontal field of view in degrees");
  render->add_flag("--depth", rf.depth, "Also write depth maps");
  render->add_option("--threads", rf.threads, "Worker thread cap")->check(CLI::PositiveNumber);
  render->add_option("--seed", rf.seed, "Random seed (rendering is deterministic)");

  std::string eval_model, eval_dataset, eval_split = "test", eval_out;
  int eval_threads = 1;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Score a model on a dataset split");
  eval->add_option("--model", eval_model, "Model directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--dataset", eval_dataset, "Dataset root")->required();
  eval->add_option("--split", eval_split, "train|val|test");
  eval->add_option("--out", eval_out, "Directory for metrics.csv");
  eval->add_option("--threads", eval_threads, "Worker thread cap")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "Random seed (evaluation is deterministic)");

  RunFlags ablate_flags;
  std::string axis;
  std::string ablate_split = "test";
  auto* ablate = app.add_subcommand("ablate", "Train and score one model per variant of an axis");
  add_run_flags(ablate, ablate_flags);
  ablate->add_option("--axis", axis, "factorization|fusion|planes|rank")
      ->required()
      ->check(CLI::IsMember({"factorization", "fusion", "planes", "rank"}));
  ablate->add_option("--split", ablate_split, "Split used for scoring");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      syn.scene = scene_kind_from_string(syn_scene);
      return cmd_gen_synthetic(syn, syn_out);
    }
    if (*train_cmd) return cmd_train(train_flags);
    if (*render) return cmd_render(rf);
    if (*eval) return cmd_eval(eval_model, eval_dataset, eval_split, eval_out, eval_threads);
    if (*ablate) return cmd_ablate(ablate_flags, axis, ablate_split);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
