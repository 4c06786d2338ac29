#include "hexplane/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

namespace hexplane {

Camera Camera::from_fov(int width, int height, double angle_x, const Eigen::Matrix4d& pose) {
  Camera c;
  c.width = width;
  c.height = height;
  c.fx = static_cast<double>(width) / (2.0 * std::tan(0.5 * angle_x));
  c.fy = c.fx;
  c.cx = 0.5 * width - 0.5;
  c.cy = 0.5 * height - 0.5;
  c.cam_to_world = pose;
  return c;
}

void Camera::validate() const {
  if (width < 1 || height < 1) throw ConfigError("camera needs a positive image size");
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("camera focal lengths must be positive");
  if (!(near < far)) throw ConfigError("camera near plane must be closer than far plane");
  const Eigen::RowVector4d bottom = cam_to_world.row(3);
  if (bottom != Eigen::RowVector4d(0, 0, 0, 1)) throw ConfigError("camera pose bottom row must be (0,0,0,1)");
  if (!cam_to_world.allFinite()) throw ConfigError("camera pose has non-finite entries");
}

Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d back = (eye - target).normalized();  // camera +z
  Eigen::Vector3d right = up.cross(back);
  if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX().cross(back);
  right.normalize();
  const Eigen::Vector3d cam_up = back.cross(right);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 1>(0, 0) = right;
  m.block<3, 1>(0, 1) = cam_up;
  m.block<3, 1>(0, 2) = back;
  m.block<3, 1>(0, 3) = eye;
  return m;
}

void RayBatch::append(const RayBatch& other) {
  origins.insert(origins.end(), other.origins.begin(), other.origins.end());
  directions.insert(directions.end(), other.directions.begin(), other.directions.end());
  times.insert(times.end(), other.times.begin(), other.times.end());
}

Eigen::Vector3d pixel_direction(const Camera& camera, double px, double py) {
  const Eigen::Vector3d d_cam((px - camera.cx) / camera.fx, -(py - camera.cy) / camera.fy, -1.0);
  return (camera.cam_to_world.block<3, 3>(0, 0) * d_cam).normalized();
}

RayBatch rays_for_camera(const Camera& camera, double time) {
  camera.validate();
  RayBatch rays;
  const auto n = static_cast<std::size_t>(camera.width) * camera.height;
  rays.origins.reserve(n);
  rays.directions.reserve(n);
  rays.times.reserve(n);
  const Eigen::Vector3d origin = camera.cam_to_world.block<3, 1>(0, 3);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) rays.push(origin, pixel_direction(camera, x, y), time);
  }
  return rays;
}

Eigen::Vector3d ndc_point(const Eigen::Vector3d& p, const NdcParams& params) {
  if (!(p.z() < 0.0)) throw ConfigError("NDC projection needs a point in front of the camera");
  const double ax = -2.0 * params.focal / params.width;
  const double ay = -2.0 * params.focal / params.height;
  return {ax * p.x() / p.z(), ay * p.y() / p.z(), 1.0 + 2.0 * params.near / p.z()};
}

RayBatch ndc_transform(const RayBatch& rays, const NdcParams& params) {
  const double ax = -2.0 * params.focal / params.width;
  const double ay = -2.0 * params.focal / params.height;
  RayBatch out;
  out.times = rays.times;
  out.origins.reserve(rays.size());
  out.directions.reserve(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const Eigen::Vector3d& d = rays.directions[i];
    if (!(d.z() < 0.0)) throw ConfigError("ray does not enter the forward frustum");
    // Slide the origin onto the near plane first.
    const double shift = -(params.near + rays.origins[i].z()) / d.z();
    const Eigen::Vector3d o = rays.origins[i] + shift * d;
    const Eigen::Vector3d o_ndc(ax * o.x() / o.z(), ay * o.y() / o.z(), 1.0 + 2.0 * params.near / o.z());
    const Eigen::Vector3d d_ndc(ax * (d.x() / d.z() - o.x() / o.z()), ay * (d.y() / d.z() - o.y() / o.z()),
                                -2.0 * params.near / o.z());
    out.origins.push_back(o_ndc);
    out.directions.push_back(d_ndc);
  }
  return out;
}

Eigen::Vector3d spherical_reparam(const Eigen::Vector3d& p) {
  const double n = p.norm();
  if (!(n > 0.0)) throw ConfigError("spherical coordinates are undefined at the origin");
  const double theta = std::acos(std::clamp(p.z() / n, -1.0, 1.0));
  const double rho = std::hypot(p.x(), p.y());
  const double phi = rho > 0.0 ? std::atan2(p.y(), p.x()) : 0.0;
  return {theta, phi, 1.0 / n};
}

Eigen::Vector3d spherical_inverse(const Eigen::Vector3d& trp) {
  const double dist = 1.0 / trp.z();
  const double st = std::sin(trp.x());
  return {dist * st * std::cos(trp.y()), dist * st * std::sin(trp.y()), dist * std::cos(trp.x())};
}

AxisDomain spherical_domain(double time_min, double time_max) {
  AxisDomain d;
  d.space_min = Eigen::Vector3d(0.0, -std::numbers::pi, 0.0);
  d.space_max = Eigen::Vector3d(std::numbers::pi, std::numbers::pi, 1.0);
  d.time_min = time_min;
  d.time_max = time_max;
  return d;
}

std::string to_string(CoordSystem cs) {
  switch (cs) {
    case CoordSystem::Cartesian: return "cartesian";
    case CoordSystem::NDC: return "ndc";
    case CoordSystem::Spherical: return "spherical";
  }
  return "?";
}

CoordSystem coord_system_from_string(const std::string& name) {
  for (auto cs : {CoordSystem::Cartesian, CoordSystem::NDC, CoordSystem::Spherical}) {
    if (to_string(cs) == name) return cs;
  }
  throw ConfigError("unknown coordinate system '" + name + "'");
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_double(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

std::uint64_t ray_seed(std::uint64_t seed, std::uint64_t ray_id) {
  std::uint64_t s = seed ^ 0x5851f42d4c957f2dULL;
  const std::uint64_t a = splitmix64(s);
  std::uint64_t t = a ^ (ray_id * 0x2545f4914f6cdd1dULL);
  return splitmix64(t);
}

bool intersect_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction, const Eigen::Vector3d& lo,
                   const Eigen::Vector3d& hi, double s_min, double s_max, double& enter, double& exit) {
  enter = s_min;
  exit = s_max;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(direction[i]) < 1e-15) {
      if (origin[i] < lo[i] || origin[i] > hi[i]) return false;
      continue;
    }
    const double inv = 1.0 / direction[i];
    double a = (lo[i] - origin[i]) * inv;
    double b = (hi[i] - origin[i]) * inv;
    if (a > b) std::swap(a, b);
    enter = std::max(enter, a);
    exit = std::min(exit, b);
  }
  return exit > enter;
}

void sample_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction, double time,
                const AxisDomain& domain, const SamplingSpec& spec, std::uint64_t ray_id, RaySamples& out) {
  if (spec.n_samples < 1) throw ConfigError("need at least one sample per ray");
  out.points.clear();
  out.distances.clear();
  out.deltas.clear();
  out.hit = false;
  const int n = spec.n_samples;
  std::uint64_t state = spec.jitter ? ray_seed(spec.seed, ray_id) : 0;
  auto offset = [&]() { return spec.jitter ? unit_double(state) : 0.5; };
  const double t = std::clamp(time, domain.time_min, domain.time_max);

  if (spec.coords == CoordSystem::Spherical) {
    out.hit = true;
    out.points.reserve(n);
    for (int k = 0; k < n; ++k) {
      const double r = (static_cast<double>(n - k) - offset()) / n;  // in (0, 1]
      out.distances.push_back(spec.spherical_near / std::max(r, 1e-12));
    }
    for (int k = 0; k < n; ++k) {
      const double gap = k + 1 < n ? out.distances[k + 1] - out.distances[k]
                                   : (n > 1 ? out.distances[k] - out.distances[k - 1] : spec.spherical_near);
      out.deltas.push_back(gap);
      const Eigen::Vector3d p = origin + out.distances[k] * direction;
      Eigen::Vector3d trp = p.norm() > 0.0 ? spherical_reparam(p) : Eigen::Vector3d(0.0, 0.0, 1.0);
      out.points.push_back(clamp_to_domain(domain, {trp.x(), trp.y(), trp.z(), t}));
    }
    return;
  }

  const double s_max = spec.coords == CoordSystem::NDC ? 1.0 : std::numeric_limits<double>::infinity();
  double enter = 0.0;
  double exit = 0.0;
  if (!intersect_box(origin, direction, domain.space_min, domain.space_max, 0.0, s_max, enter, exit)) return;
  out.hit = true;
  const double step = (exit - enter) / n;
  const double seg = step * direction.norm();
  out.points.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double s = enter + (k + offset()) * step;
    const Eigen::Vector3d p = origin + s * direction;
    out.distances.push_back(s);
    out.deltas.push_back(seg);
    out.points.push_back(clamp_to_domain(domain, {p.x(), p.y(), p.z(), t}));
  }
}

SampleSet stratified_samples(const RayBatch& rays, const AxisDomain& domain, const SamplingSpec& spec,
                             std::uint64_t first_ray_id) {
  SampleSet set(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) {
    sample_ray(rays.origins[i], rays.directions[i], rays.times[i], domain, spec, first_ray_id + i, set[i]);
  }
  return set;
}

}  // namespace hexplane
