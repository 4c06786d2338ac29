#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hexplane/camera.hpp"
#include "hexplane/decoder.hpp"
#include "hexplane/field.hpp"

namespace hexplane {

/// softplus(raw) = log(1 + exp(raw)), evaluated without overflow.
double softplus(double raw);
/// d softplus / d raw = logistic(raw).
double softplus_grad(double raw);

struct CompositeResult {
  Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
  double depth = 0.0;
  double acc = 0.0;
  std::vector<double> weights;
};

/// Emission-absorption quadrature: alpha_i = 1 - exp(-sigma_i delta_i),
/// T_i = exp(-sum_{j<i} sigma_j delta_j), w_i = T_i alpha_i.
/// `distances` (optional) feeds the expected depth.
CompositeResult composite(std::span<const double> sigmas, std::span<const double> deltas,
                          std::span<const Eigen::Vector3d> colors, std::span<const double> distances = {});

/// Adjoint of composite's rgb output for an upstream dL/drgb.
/// dL/dsigma_k = delta_k (T_{k+1} c_k - sum_{j>k} w_j c_j) . dL/drgb,
/// dL/dc_k = w_k dL/drgb. With `corrupt` set, the transmittance term is
/// dropped (a deliberately wrong adjoint for negative-control checks).
void composite_backward(std::span<const double> sigmas, std::span<const double> deltas,
                        std::span<const Eigen::Vector3d> colors, const Eigen::Vector3d& d_rgb,
                        std::span<double> d_sigmas, std::span<Eigen::Vector3d> d_colors, bool corrupt = false);

/// Binary occupancy over the spatial part of a domain, res^3 cells.
struct EmptinessVoxel {
  int res = 0;
  AxisDomain domain;
  std::vector<std::uint8_t> occupancy;  // [x][y][z]

  bool empty() const { return res == 0; }
  std::size_t cell(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * res + iy) * res + iz;
  }
  /// Index triple of the cell containing a (clamped) point in field coordinates.
  std::array<int, 3> cell_of(const Point4& p) const;
  bool occupied(const Point4& p) const;
  std::size_t occupied_count() const;
  /// Center of a cell in field coordinates (time left at time_min).
  Point4 cell_center(int ix, int iy, int iz) const;
};

using SigmaFunction = std::function<double(const Point4&)>;

/// Occupied iff the maximum over `n_time_samples` evenly spaced times of the
/// activated density at the cell center reaches `threshold`; the result is
/// then dilated by one cell (26-neighbourhood).
EmptinessVoxel build_emptiness_voxel(const SigmaFunction& sigma, const AxisDomain& domain, int res,
                                     int n_time_samples, double threshold, int threads = 1);
EmptinessVoxel build_emptiness_voxel(const Field& opacity, double density_shift, int res, int n_time_samples,
                                     double threshold, int threads = 1);

/// Voxel file ("HEXV"): u32 version, u32 res, f64 domain bounds, u8 cells.
void save_voxel(const std::filesystem::path& path, const EmptinessVoxel& voxel);
EmptinessVoxel load_voxel(const std::filesystem::path& path);

struct RenderSettings {
  SamplingSpec sampling;
  /// Added to the raw opacity before the softplus.
  double density_shift = -2.25;
  /// Appearance is only queried where the compositing weight exceeds this.
  double weight_cutoff = 1e-4;
  int chunk_rays = 256;
  int threads = 1;
  /// Fixed-order gradient reduction (bit-identical across thread counts).
  bool deterministic = true;
  /// Test hook: use a wrong compositing adjoint.
  bool corrupt_composite_adjoint = false;
  /// Fill RenderStats::regime (costs an extra decoder pass).
  bool track_regime = false;
};

struct RenderStats {
  std::size_t rays = 0;
  std::size_t samples = 0;
  std::size_t skipped = 0;
  std::size_t appearance_queries = 0;
  /// Fingerprint of the appearance mask and decoder branches when tracked.
  std::uint64_t regime = 0;

  RenderStats& operator+=(const RenderStats& o);
};

struct RenderOutput {
  std::vector<Eigen::Vector3d> rgb;
  std::vector<double> depth;
  std::vector<double> acc;
  RenderStats stats;
};

/// The three learnable pieces a renderer needs.
struct SceneModelView {
  const Field* opacity = nullptr;
  const Field* appearance = nullptr;
  const ColorDecoder* decoder = nullptr;
  const EmptinessVoxel* voxel = nullptr;  // null or empty: no skipping
};

/// Gradient slabs for each component, congruent with their parameters().
struct RenderGrads {
  std::vector<std::span<float>> opacity;
  std::vector<std::span<float>> appearance;
  std::vector<std::span<float>> decoder;
};

/// Upstream gradient dL/drgb for ray `index` given its rendered colour.
using RgbAdjoint = std::function<Eigen::Vector3d(std::size_t index, const Eigen::Vector3d& rgb)>;

/// Forward rendering. `first_ray_id` offsets the per-ray jitter streams.
RenderOutput render_rays(const SceneModelView& model, const RayBatch& rays, const RenderSettings& settings,
                         std::uint64_t first_ray_id = 0);

/// Forward rendering plus the exact adjoint (voxel skipping and the
/// appearance cutoff act as fixed masks). Gradients are added to `grads`.
RenderOutput render_rays_backward(const SceneModelView& model, const RayBatch& rays,
                                  const RenderSettings& settings, const RgbAdjoint& adjoint, RenderGrads& grads,
                                  std::uint64_t first_ray_id = 0);

/// Depth map file ("DPTH"): u32 width, u32 height, f32 row-major values.
void save_depth(const std::filesystem::path& path, int width, int height, std::span<const double> depth);
std::vector<float> load_depth(const std::filesystem::path& path, int& width, int& height);

}  // namespace hexplane
