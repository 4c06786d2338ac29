#include "hexplane/feature_grid.hpp"

#include <algorithm>
#include <cmath>

namespace hexplane {

LerpStencil lerp_stencil(double u, int res) {
  const double x = u * static_cast<double>(res - 1);
  const double nearest = std::round(x);
  LerpStencil s;
  if (std::abs(x - nearest) < 1e-9) {
    const int node = std::clamp(static_cast<int>(nearest), 0, res - 1);
    // The last node is expressed as the upper end of the last cell.
    if (node == res - 1) {
      s.index = res - 2;
      s.frac = 1.0;
    } else {
      s.index = node;
      s.frac = 0.0;
    }
    return s;
  }
  const int i0 = std::clamp(static_cast<int>(std::floor(x)), 0, res - 2);
  s.index = i0;
  s.frac = std::clamp(x - static_cast<double>(i0), 0.0, 1.0);
  return s;
}

FeaturePlane::FeaturePlane(Axis a, Axis b, int ra, int rb, int c)
    : axis_a(a), axis_b(b), res_a(ra), res_b(rb), channels(c) {
  if (ra < 2 || rb < 2) throw ConfigError("feature plane needs at least 2 nodes per axis");
  if (c < 0) throw ConfigError("feature plane channel count must be non-negative");
  if (a == b) throw ConfigError("feature plane axes must be distinct");
  data.assign(static_cast<std::size_t>(ra) * rb * c, 0.0f);
}

void FeaturePlane::validate() const {
  if (res_a < 2 || res_b < 2 || channels < 0 || axis_a == axis_b) {
    throw ConfigError("malformed feature plane");
  }
  if (data.size() != static_cast<std::size_t>(res_a) * res_b * channels) {
    throw ConfigError("feature plane storage does not match its shape");
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw ConfigError("non-finite feature plane entry");
  }
}

void bilinear_sample(const FeaturePlane& plane, double u, double v, std::span<double> out) {
  const LerpStencil sa = lerp_stencil(u, plane.res_a);
  const LerpStencil sb = lerp_stencil(v, plane.res_b);
  const double w00 = (1.0 - sa.frac) * (1.0 - sb.frac);
  const double w01 = (1.0 - sa.frac) * sb.frac;
  const double w10 = sa.frac * (1.0 - sb.frac);
  const double w11 = sa.frac * sb.frac;
  const int c_count = plane.channels;
  const float* d00 = plane.data.data() + plane.index(sa.index, sb.index);
  const float* d01 = d00 + c_count;
  const float* d10 = d00 + static_cast<std::size_t>(plane.res_b) * c_count;
  const float* d11 = d10 + c_count;
  for (int c = 0; c < c_count; ++c) {
    out[c] = w00 * d00[c] + w01 * d01[c] + w10 * d10[c] + w11 * d11[c];
  }
}

void bilinear_scatter(const FeaturePlane& plane, double u, double v,
                      std::span<const double> upstream, std::span<float> grads) {
  const LerpStencil sa = lerp_stencil(u, plane.res_a);
  const LerpStencil sb = lerp_stencil(v, plane.res_b);
  const double w00 = (1.0 - sa.frac) * (1.0 - sb.frac);
  const double w01 = (1.0 - sa.frac) * sb.frac;
  const double w10 = sa.frac * (1.0 - sb.frac);
  const double w11 = sa.frac * sb.frac;
  const int c_count = plane.channels;
  float* g00 = grads.data() + plane.index(sa.index, sb.index);
  float* g01 = g00 + c_count;
  float* g10 = g00 + static_cast<std::size_t>(plane.res_b) * c_count;
  float* g11 = g10 + c_count;
  for (int c = 0; c < c_count; ++c) {
    const double g = upstream[c];
    if (w00 != 0.0) g00[c] += static_cast<float>(w00 * g);
    if (w01 != 0.0) g01[c] += static_cast<float>(w01 * g);
    if (w10 != 0.0) g10[c] += static_cast<float>(w10 * g);
    if (w11 != 0.0) g11[c] += static_cast<float>(w11 * g);
  }
}

FeaturePlane resample(const FeaturePlane& plane, int res_a, int res_b) {
  FeaturePlane out(plane.axis_a, plane.axis_b, res_a, res_b, plane.channels);
  std::vector<double> buf(static_cast<std::size_t>(plane.channels));
  for (int i = 0; i < res_a; ++i) {
    const double u = static_cast<double>(i) / (res_a - 1);
    for (int j = 0; j < res_b; ++j) {
      const double v = static_cast<double>(j) / (res_b - 1);
      bilinear_sample(plane, u, v, buf);
      for (int c = 0; c < plane.channels; ++c) out.at(i, j, c) = static_cast<float>(buf[c]);
    }
  }
  return out;
}

FeatureLine::FeatureLine(Axis a, int r, int c) : axis(a), res(r), channels(c) {
  if (r < 2) throw ConfigError("feature line needs at least 2 nodes");
  if (c < 0) throw ConfigError("feature line channel count must be non-negative");
  data.assign(static_cast<std::size_t>(r) * c, 0.0f);
}

void FeatureLine::validate() const {
  if (res < 2 || channels < 0 || data.size() != static_cast<std::size_t>(res) * channels) {
    throw ConfigError("malformed feature line");
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw ConfigError("non-finite feature line entry");
  }
}

void linear_sample(const FeatureLine& line, double u, std::span<double> out) {
  const LerpStencil s = lerp_stencil(u, line.res);
  const double w = s.frac;
  const float* d0 = line.data.data() + static_cast<std::size_t>(s.index) * line.channels;
  const float* d1 = d0 + line.channels;
  // a + w (b - a) stays exactly a when both rows agree.
  for (int c = 0; c < line.channels; ++c) {
    const double a = d0[c];
    out[c] = a + w * (static_cast<double>(d1[c]) - a);
  }
}

void linear_scatter(const FeatureLine& line, double u, std::span<const double> upstream,
                    std::span<float> grads) {
  const LerpStencil s = lerp_stencil(u, line.res);
  const double w0 = 1.0 - s.frac;
  const double w1 = s.frac;
  float* g0 = grads.data() + static_cast<std::size_t>(s.index) * line.channels;
  float* g1 = g0 + line.channels;
  for (int c = 0; c < line.channels; ++c) {
    if (w0 != 0.0) g0[c] += static_cast<float>(w0 * upstream[c]);
    if (w1 != 0.0) g1[c] += static_cast<float>(w1 * upstream[c]);
  }
}

FeatureLine resample(const FeatureLine& line, int res) {
  FeatureLine out(line.axis, res, line.channels);
  std::vector<double> buf(static_cast<std::size_t>(line.channels));
  for (int i = 0; i < res; ++i) {
    linear_sample(line, static_cast<double>(i) / (res - 1), buf);
    for (int c = 0; c < line.channels; ++c) out.at(i, c) = static_cast<float>(buf[c]);
  }
  return out;
}

void fill_uniform(std::span<float> values, std::mt19937_64& rng, float scale) {
  std::uniform_real_distribution<float> dist(-scale, scale);
  for (float& v : values) v = dist(rng);
}

}  // namespace hexplane
