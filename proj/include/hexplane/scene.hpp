#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hexplane/camera.hpp"
#include "hexplane/core.hpp"
#include "hexplane/image.hpp"

namespace hexplane {

enum class SceneKind : std::uint8_t {
  OrbitingSphere,  // one sphere circling the z axis
  MergingSpheres,  // two spheres that meet and fuse (topology change)
  StaticSphere,    // a sphere resting at the origin
  Unbounded,       // sphere plus a distant shell, cameras inside looking out
  Empty,           // zero density everywhere
};

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

/// Closed-form density and colour used as ground truth.
struct AnalyticScene {
  SceneKind kind = SceneKind::OrbitingSphere;
  double radius = 0.4;
  double orbit_radius = 0.45;
  double angular_rate = 6.283185307179586;  // one revolution over t in [0, 1]
  double sigma0 = 40.0;
  double edge = 0.015;
  /// Box the ground truth is ray-marched through (and the default field domain).
  AxisDomain bounds;

  static AnalyticScene make(SceneKind kind);

  double density(const Point4& p) const;
  Eigen::Vector3d color(const Point4& p) const;
};

struct SyntheticConfig {
  SceneKind scene = SceneKind::OrbitingSphere;
  int n_cameras = 30;
  int n_times = 20;
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
  int gt_samples = 512;
  double camera_distance = 4.0;
  double fov_degrees = 40.0;
  int n_test_cameras = 6;
  int n_test_times = 5;
  int n_val_cameras = 2;
  int threads = 1;
};

/// Renders one ground-truth image by ray-marching the analytic scene.
Image render_analytic(const AnalyticScene& scene, const Camera& camera, double time, int n_samples);

/// Camera poses of a generated dataset.
std::vector<Eigen::Matrix4d> synthetic_poses(const SyntheticConfig& config, int count, std::uint64_t stream);

/// Writes transforms_{train,val,test}.json and PNGs under `root`. Train
/// frames are every camera at every time k / (n_times - 1); val and test use
/// unseen cameras at a subset of those times.
void gen_synthetic(const SyntheticConfig& config, const std::filesystem::path& root);

}  // namespace hexplane
