#include "hexplane/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "hexplane/dataset.hpp"
#include "hexplane/parallel.hpp"
#include "hexplane/render.hpp"

namespace hexplane {

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::OrbitingSphere: return "orbiting_sphere";
    case SceneKind::MergingSpheres: return "merging_spheres";
    case SceneKind::StaticSphere: return "static_sphere";
    case SceneKind::Unbounded: return "unbounded";
    case SceneKind::Empty: return "empty";
  }
  return "?";
}

SceneKind scene_kind_from_string(const std::string& name) {
  for (auto k : {SceneKind::OrbitingSphere, SceneKind::MergingSpheres, SceneKind::StaticSphere,
                 SceneKind::Unbounded, SceneKind::Empty}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown scene '" + name + "'");
}

AnalyticScene AnalyticScene::make(SceneKind kind) {
  AnalyticScene s;
  s.kind = kind;
  s.bounds = AxisDomain::cube(1.0);
  switch (kind) {
    case SceneKind::MergingSpheres:
      s.radius = 0.3;
      s.orbit_radius = 0.55;
      break;
    case SceneKind::Unbounded:
      s.radius = 0.6;
      s.orbit_radius = 2.5;
      s.edge = 0.03;
      s.bounds = AxisDomain::cube(8.0);
      break;
    default:
      break;
  }
  return s;
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double ball(const Eigen::Vector3d& p, const Eigen::Vector3d& c, double radius, double edge) {
  return logistic((radius - (p - c).norm()) / edge);
}

Eigen::Vector3d local_color(const Eigen::Vector3d& p, const Eigen::Vector3d& c, double radius) {
  const Eigen::Vector3d l = (p - c) / radius;
  return (Eigen::Vector3d::Constant(0.5) + 0.45 * l).cwiseMax(0.0).cwiseMin(1.0);
}

// Sphere centres of each scene kind at time t.
Eigen::Vector3d orbit_center(const AnalyticScene& s, double t) {
  const double a = s.angular_rate * t;
  return {s.orbit_radius * std::cos(a), s.orbit_radius * std::sin(a), 0.0};
}

std::array<Eigen::Vector3d, 2> merge_centers(const AnalyticScene& s, double t) {
  // Separate at t = 0, fully overlapping at t = 1.
  const double x = s.orbit_radius * (1.0 - t);
  return {Eigen::Vector3d(-x, 0.0, 0.0), Eigen::Vector3d(x, 0.0, 0.0)};
}

constexpr double kShellInner = 6.5;
constexpr double kShellOuter = 7.0;

}  // namespace

double AnalyticScene::density(const Point4& p4) const {
  const Eigen::Vector3d p(p4[0], p4[1], p4[2]);
  const double t = p4[3];
  switch (kind) {
    case SceneKind::Empty:
      return 0.0;
    case SceneKind::StaticSphere:
      return sigma0 * ball(p, Eigen::Vector3d::Zero(), radius, edge);
    case SceneKind::OrbitingSphere:
      return sigma0 * ball(p, orbit_center(*this, t), radius, edge);
    case SceneKind::MergingSpheres: {
      const auto c = merge_centers(*this, t);
      return sigma0 * std::max(ball(p, c[0], radius, edge), ball(p, c[1], radius, edge));
    }
    case SceneKind::Unbounded: {
      const double r = p.norm();
      const double shell = logistic((r - kShellInner) / edge) * logistic((kShellOuter - r) / edge);
      return sigma0 * std::max(ball(p, orbit_center(*this, t), radius, edge), shell);
    }
  }
  return 0.0;
}

Eigen::Vector3d AnalyticScene::color(const Point4& p4) const {
  const Eigen::Vector3d p(p4[0], p4[1], p4[2]);
  const double t = p4[3];
  switch (kind) {
    case SceneKind::Empty:
      return Eigen::Vector3d::Zero();
    case SceneKind::StaticSphere:
      return local_color(p, Eigen::Vector3d::Zero(), radius);
    case SceneKind::OrbitingSphere:
      return local_color(p, orbit_center(*this, t), radius);
    case SceneKind::MergingSpheres: {
      const auto c = merge_centers(*this, t);
      const double wa = ball(p, c[0], radius, edge);
      const double wb = ball(p, c[1], radius, edge);
      const Eigen::Vector3d ca(0.9, 0.35, 0.2);
      const Eigen::Vector3d cb(0.2, 0.45, 0.9);
      const double sum = wa + wb;
      return sum > 0.0 ? ((wa * ca + wb * cb) / sum).eval() : Eigen::Vector3d(0.5, 0.5, 0.5);
    }
    case SceneKind::Unbounded: {
      const Eigen::Vector3d c = orbit_center(*this, t);
      if ((p - c).norm() < radius + 4 * edge) return local_color(p, c, radius);
      const Eigen::Vector3d d = p.normalized();
      return Eigen::Vector3d(0.5 + 0.4 * d.x(), 0.5 + 0.4 * d.y(), 0.5 + 0.4 * d.z()).cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return Eigen::Vector3d::Zero();
}

Image render_analytic(const AnalyticScene& scene, const Camera& camera, double time, int n_samples) {
  const RayBatch rays = rays_for_camera(camera, time);
  SamplingSpec spec;
  spec.n_samples = n_samples;
  Image img(camera.width, camera.height);
  RaySamples samples;
  std::vector<double> sigmas;
  std::vector<Eigen::Vector3d> colors;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    sample_ray(rays.origins[i], rays.directions[i], time, scene.bounds, spec, i, samples);
    if (!samples.hit) continue;
    sigmas.resize(samples.points.size());
    colors.resize(samples.points.size());
    for (std::size_t k = 0; k < samples.points.size(); ++k) {
      sigmas[k] = scene.density(samples.points[k]);
      colors[k] = scene.color(samples.points[k]);
    }
    img.set_pixel(i, composite(sigmas, samples.deltas, colors).rgb);
  }
  return img;
}

std::vector<Eigen::Matrix4d> synthetic_poses(const SyntheticConfig& config, int count, std::uint64_t stream) {
  std::mt19937_64 rng(config.seed * 0x9e3779b97f4a7c15ULL + stream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::Matrix4d> poses;
  const double deg = std::numbers::pi / 180.0;
  if (config.scene == SceneKind::Unbounded) {
    for (int i = 0; i < count; ++i) {
      const double az = 2.0 * std::numbers::pi * (i + unit(rng)) / count;
      const double el = (-15.0 + 30.0 * unit(rng)) * deg;
      Eigen::Vector3d eye(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5);
      eye *= 0.4;
      const Eigen::Vector3d dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      poses.push_back(look_at(eye, eye + 5.0 * dir));
    }
    return poses;
  }
  const double az0 = 2.0 * std::numbers::pi * unit(rng);
  for (int i = 0; i < count; ++i) {
    // Golden-angle spiral over elevations 15..65 degrees with a little jitter.
    const double f = (i + 0.5) / count;
    const double el = (15.0 + 50.0 * f + 4.0 * (unit(rng) - 0.5)) * deg;
    const double az = az0 + i * 2.399963229728653 + 0.2 * (unit(rng) - 0.5);
    const Eigen::Vector3d eye = config.camera_distance *
                                Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    poses.push_back(look_at(eye, Eigen::Vector3d::Zero()));
  }
  return poses;
}

namespace {

struct PendingImage {
  std::filesystem::path path;
  Camera camera;
  double time;
};

std::vector<double> time_grid(int n) {
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(n == 1 ? 0.0 : static_cast<double>(k) / (n - 1));
  return t;
}

}  // namespace

void gen_synthetic(const SyntheticConfig& config, const std::filesystem::path& root) {
  if (config.n_cameras < 1 || config.n_times < 1) throw ConfigError("need at least one camera and one time");
  if (config.width < 1 || config.height < 1 || config.gt_samples < 1) throw ConfigError("bad image size or sample count");
  const AnalyticScene scene = AnalyticScene::make(config.scene);
  const double angle_x = config.fov_degrees * std::numbers::pi / 180.0;
  const std::vector<double> times = time_grid(config.n_times);
  std::error_code ec;
  std::vector<PendingImage> pending;

  auto emit_split = [&](const std::string& split, const std::vector<Eigen::Matrix4d>& poses,
                        const std::vector<std::vector<double>>& frame_times) {
    std::filesystem::create_directories(root / split, ec);
    if (ec) throw IoError("cannot create " + (root / split).string() + ": " + ec.message());
    std::vector<ManifestFrame> manifest;
    int index = 0;
    for (std::size_t c = 0; c < poses.size(); ++c) {
      for (double t : frame_times[c]) {
        char name[32];
        std::snprintf(name, sizeof(name), "r_%04d", index++);
        ManifestFrame f{"./" + split + "/" + name, t, poses[c]};
        manifest.push_back(f);
        pending.push_back({root / split / (std::string(name) + ".png"),
                           Camera::from_fov(config.width, config.height, angle_x, poses[c]), t});
      }
    }
    write_manifest(root / ("transforms_" + split + ".json"), angle_x, manifest, scene.bounds);
  };

  const auto train_poses = synthetic_poses(config, config.n_cameras, 0);
  emit_split("train", train_poses, std::vector<std::vector<double>>(train_poses.size(), times));

  auto held_out_times = [&](int n_cams, int offset) {
    std::vector<std::vector<double>> out;
    const int n = std::max(1, std::min(config.n_test_times, config.n_times));
    for (int c = 0; c < n_cams; ++c) {
      std::vector<double> ts;
      for (int m = 0; m < n; ++m) {
        const int idx = n == 1 ? (c + offset) % config.n_times
                               : static_cast<int>(std::lround(static_cast<double>(m) * (config.n_times - 1) / (n - 1)));
        ts.push_back(times[static_cast<std::size_t>(idx)]);
      }
      out.push_back(ts);
    }
    return out;
  };
  emit_split("val", synthetic_poses(config, config.n_val_cameras, 1), held_out_times(config.n_val_cameras, 1));
  emit_split("test", synthetic_poses(config, config.n_test_cameras, 2), held_out_times(config.n_test_cameras, 0));

  parallel_for(pending.size(), config.threads, [&](std::size_t i, int) {
    write_png(pending[i].path, render_analytic(scene, pending[i].camera, pending[i].time, config.gt_samples));
  });
}

}  // namespace hexplane
