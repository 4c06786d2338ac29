#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hexplane/core.hpp"

namespace hexplane {

/// Pinhole camera. Camera space looks down -z with +y up; pixel (0,0) is the
/// top-left pixel and its center sits at (0,0) in pixel units, so a
/// symmetric camera has cx = W/2 - 0.5.
struct Camera {
  int width = 1;
  int height = 1;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix4d cam_to_world = Eigen::Matrix4d::Identity();
  double near = 0.1;
  double far = 100.0;

  /// Symmetric camera with fx = fy = W / (2 tan(angle_x / 2)).
  static Camera from_fov(int width, int height, double angle_x, const Eigen::Matrix4d& pose);

  void validate() const;
};

/// Pose looking from `eye` towards `target`, camera -z pointing at the target.
Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

struct RayBatch {
  std::vector<Eigen::Vector3d> origins;
  std::vector<Eigen::Vector3d> directions;
  std::vector<double> times;

  std::size_t size() const { return origins.size(); }
  void push(const Eigen::Vector3d& o, const Eigen::Vector3d& d, double t) {
    origins.push_back(o);
    directions.push_back(d);
    times.push_back(t);
  }
  void append(const RayBatch& other);
};

/// Unit direction through the center of pixel (px, py), in world space.
Eigen::Vector3d pixel_direction(const Camera& camera, double px, double py);

/// One ray per pixel in row-major order.
RayBatch rays_for_camera(const Camera& camera, double time);

/// Intrinsics of the forward-facing frustum mapped by the NDC transform.
struct NdcParams {
  int width = 1;
  int height = 1;
  double focal = 1.0;
  double near = 1.0;
};

/// Projects rays (expressed in the frame whose -z axis is the viewing
/// direction) into normalized device coordinates. The returned origins lie on
/// z = -1 and origin + direction reaches z = +1 as the ray goes to infinity;
/// directions are not unit length. Throws ConfigError for rays that never
/// enter the forward frustum.
RayBatch ndc_transform(const RayBatch& rays, const NdcParams& params);

/// NDC image of a camera-frame point with z < 0.
Eigen::Vector3d ndc_point(const Eigen::Vector3d& p, const NdcParams& params);

/// (theta, phi, r): polar angle from +z, azimuth in [-pi, pi] (0 on the pole),
/// inverse distance. Throws ConfigError at the origin.
Eigen::Vector3d spherical_reparam(const Eigen::Vector3d& p);
Eigen::Vector3d spherical_inverse(const Eigen::Vector3d& trp);

/// The field domain used for spherical coordinates: theta in [0, pi],
/// phi in [-pi, pi], r in [0, 1].
AxisDomain spherical_domain(double time_min = 0.0, double time_max = 1.0);

enum class CoordSystem : std::uint8_t { Cartesian = 0, NDC = 1, Spherical = 2 };

std::string to_string(CoordSystem cs);
CoordSystem coord_system_from_string(const std::string& name);

struct SamplingSpec {
  int n_samples = 64;
  CoordSystem coords = CoordSystem::Cartesian;
  bool jitter = false;
  std::uint64_t seed = 0;
  /// Spherical only: ray distance at r = 1 (samples sit at s = spherical_near / r).
  double spherical_near = 1.0;
};

/// Samples along one ray. `points` are field-domain coordinates (already
/// clamped into the domain); `distances` are ray parameters along the
/// original ray; `deltas` are segment lengths in the units of that system.
struct RaySamples {
  bool hit = false;
  std::vector<Point4> points;
  std::vector<double> distances;
  std::vector<double> deltas;
};

/// Per-ray jitter stream seed; independent of batch order and thread count.
std::uint64_t ray_seed(std::uint64_t seed, std::uint64_t ray_id);

/// Stratified samples between domain entry and exit (Cartesian and NDC) or at
/// r linearly spaced in (0, 1] (spherical). Rays that miss the domain come
/// back with hit = false and no samples.
void sample_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction, double time,
                const AxisDomain& domain, const SamplingSpec& spec, std::uint64_t ray_id,
                RaySamples& out);

using SampleSet = std::vector<RaySamples>;

SampleSet stratified_samples(const RayBatch& rays, const AxisDomain& domain, const SamplingSpec& spec,
                             std::uint64_t first_ray_id = 0);

/// Slab intersection of the ray with the spatial box; returns false on a miss.
/// Parameters are clipped to [s_min, s_max].
bool intersect_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                   const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, double s_min, double s_max,
                   double& enter, double& exit);

}  // namespace hexplane
