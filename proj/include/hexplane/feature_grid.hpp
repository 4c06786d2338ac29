#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "hexplane/core.hpp"

namespace hexplane {

/// 1D interpolation stencil: value = (1 - frac) * node[index] + frac * node[index + 1].
struct LerpStencil {
  int index = 0;
  double frac = 0.0;
};

/// Corner-aligned stencil for u in [0,1] over `res` nodes. Coordinates within
/// 1e-9 grid units of a node snap onto it so node queries are exact.
LerpStencil lerp_stencil(double u, int res);

/// A res_a x res_b grid of R-channel feature vectors spanning one axis pair.
/// Storage is row-major [a][b][channel].
struct FeaturePlane {
  Axis axis_a = Axis::X;
  Axis axis_b = Axis::Y;
  int res_a = 2;
  int res_b = 2;
  int channels = 1;
  std::vector<float> data;

  FeaturePlane() = default;
  FeaturePlane(Axis a, Axis b, int res_a, int res_b, int channels);

  std::size_t index(int ia, int ib, int c = 0) const {
    return (static_cast<std::size_t>(ia) * res_b + ib) * channels + c;
  }
  float& at(int ia, int ib, int c) { return data[index(ia, ib, c)]; }
  float at(int ia, int ib, int c) const { return data[index(ia, ib, c)]; }

  bool is_temporal() const { return axis_a == Axis::T || axis_b == Axis::T; }

  /// Throws ConfigError on bad shape, repeated axes or non-finite entries.
  void validate() const;
};

/// Bilinear blend of the four nodes around (u, v), written per channel.
void bilinear_sample(const FeaturePlane& plane, double u, double v, std::span<double> out);

/// Adjoint of bilinear_sample: adds the weighted upstream into the four nodes.
void bilinear_scatter(const FeaturePlane& plane, double u, double v,
                      std::span<const double> upstream, std::span<float> grads);

/// Bilinear resampling of `plane` onto a corner-aligned grid of the given size.
FeaturePlane resample(const FeaturePlane& plane, int res_a, int res_b);

/// A 1D grid of R-channel vectors along one axis; with axis T this is the
/// learned piecewise-linear time function.
struct FeatureLine {
  Axis axis = Axis::T;
  int res = 2;
  int channels = 1;
  std::vector<float> data;

  FeatureLine() = default;
  FeatureLine(Axis axis, int res, int channels);

  float& at(int i, int c) { return data[static_cast<std::size_t>(i) * channels + c]; }
  float at(int i, int c) const { return data[static_cast<std::size_t>(i) * channels + c]; }

  void validate() const;
};

using TimeLine = FeatureLine;

void linear_sample(const FeatureLine& line, double u, std::span<double> out);
void linear_scatter(const FeatureLine& line, double u, std::span<const double> upstream,
                    std::span<float> grads);
FeatureLine resample(const FeatureLine& line, int res);

/// Time-line evaluation for t already clamped into [0,1].
inline void eval_timeline(const TimeLine& line, double t, std::span<double> out) {
  linear_sample(line, t, out);
}

/// i.i.d. uniform entries in [-scale, scale].
void fill_uniform(std::span<float> values, std::mt19937_64& rng, float scale);

}  // namespace hexplane
