#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "hexplane/model.hpp"
#include "hexplane/render.hpp"

using namespace hexplane;

namespace {

// Analytic single-output field for renderer tests; no learnable state.
class LambdaField final : public Field {
 public:
  using Fn = std::function<void(const Point4&, std::span<double>)>;
  LambdaField(AxisDomain domain, int features, Fn fn) : domain_(domain), features_(features), fn_(std::move(fn)) {}
  FieldKind kind() const override { return FieldKind::HexPlane; }
  const AxisDomain& domain() const override { return domain_; }
  int feature_dim() const override { return features_; }
  GridResolution resolution() const override { return {2, 2, 2, 2}; }
  void query_normalized(const Point4& u, std::span<double> out) const override {
    Point4 p;
    for (int a = 0; a < 4; ++a) {
      const Axis ax = static_cast<Axis>(a);
      p[a] = domain_.lower(ax) + u[a] * domain_.extent(ax);
    }
    fn_(p, out);
  }
  void backward_normalized(const Point4&, std::span<const double>, GradSlabs) const override {}
  std::vector<ParamView> parameters() override { return {}; }
  ParamCount param_count() const override { return {}; }
  void upsample(const GridResolution&) override {}
  std::unique_ptr<Field> clone() const override { return std::make_unique<LambdaField>(*this); }

 private:
  AxisDomain domain_;
  int features_;
  Fn fn_;
};

// SH coefficients giving a constant colour through the DC term only.
LambdaField constant_colour(const AxisDomain& d, const Eigen::Vector3d& rgb) {
  return LambdaField(d, 27, [rgb](const Point4&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int c = 0; c < 3; ++c) out[c * 9] = rgb[c] / 0.28209479177387814;
  });
}

RenderSettings plain_settings(int n_samples = 64) {
  RenderSettings s;
  s.sampling.n_samples = n_samples;
  return s;
}

// Real SH written from the normalization constants, independent of sh_basis.
std::array<double, 9> sh_reference(const Eigen::Vector3d& d) {
  const double pi = std::numbers::pi;
  const double c0 = 0.5 * std::sqrt(1.0 / pi);
  const double c1 = std::sqrt(3.0 / (4.0 * pi));
  const double c2 = 0.5 * std::sqrt(15.0 / pi);
  const double c3 = 0.25 * std::sqrt(5.0 / pi);
  const double c4 = 0.25 * std::sqrt(15.0 / pi);
  const double x = d.x(), y = d.y(), z = d.z();
  return {c0, c1 * y, c1 * z, c1 * x, c2 * x * y, c2 * y * z, c3 * (2 * z * z - x * x - y * y), c2 * x * z,
          c4 * (x * x - y * y)};
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d d(n(rng), n(rng), n(rng));
  return d.normalized();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(Rays, CenterPixelLooksDownMinusZ) {
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  pose.block<3, 3>(0, 0) = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  pose.block<3, 1>(0, 3) = Eigen::Vector3d(0.5, -1.0, 2.0);
  const Camera cam = Camera::from_fov(5, 7, 0.8, pose);
  EXPECT_DOUBLE_EQ(cam.cx, 2.0);
  EXPECT_DOUBLE_EQ(cam.cy, 3.0);
  const RayBatch rays = rays_for_camera(cam, 0.25);
  ASSERT_EQ(rays.size(), 35u);
  const Eigen::Vector3d expect = pose.block<3, 3>(0, 0) * Eigen::Vector3d(0, 0, -1);
  EXPECT_LT((rays.directions[3 * 5 + 2] - expect).norm(), 1e-12);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    EXPECT_NEAR(rays.directions[i].norm(), 1.0, 1e-12);
    EXPECT_EQ(rays.origins[i], Eigen::Vector3d(0.5, -1.0, 2.0));
    EXPECT_EQ(rays.times[i], 0.25);
  }
}

TEST(Rays, IdentityPoseOriginsAtTranslation) {
  const Camera cam = Camera::from_fov(4, 4, 1.0, Eigen::Matrix4d::Identity());
  for (const auto& o : rays_for_camera(cam, 0.0).origins) EXPECT_EQ(o, Eigen::Vector3d::Zero());
}

TEST(Rays, LookAtPointsCameraAtTarget) {
  const Eigen::Matrix4d pose = look_at({3, 1, 2}, {0, 0, 0});
  const Eigen::Vector3d forward = -pose.block<3, 1>(0, 2);
  EXPECT_LT((forward - Eigen::Vector3d(-3, -1, -2).normalized()).norm(), 1e-12);
}

TEST(Ndc, NearPlaneMapsToMinusOne) {
  const NdcParams p{64, 48, 50.0, 1.5};
  EXPECT_NEAR(ndc_point({0.2, -0.1, -1.5}, p).z(), -1.0, 1e-12);
  EXPECT_NEAR(ndc_point({0.2, -0.1, -1e12}, p).z(), 1.0, 1e-9);
}

TEST(Ndc, RayReachesPlusOneAtInfinity) {
  const NdcParams p{64, 48, 50.0, 1.0};
  RayBatch rays;
  rays.push({0.1, 0.2, 0.0}, Eigen::Vector3d(0.05, -0.02, -1.0).normalized(), 0.0);
  const RayBatch n = ndc_transform(rays, p);
  EXPECT_NEAR(n.origins[0].z(), -1.0, 1e-12);
  EXPECT_NEAR((n.origins[0] + n.directions[0]).z(), 1.0, 1e-12);
  // The NDC ray passes through the image of any point on the original ray.
  const Eigen::Vector3d far = ndc_point(rays.origins[0] + 7.0 * rays.directions[0], p);
  const Eigen::Vector3d along = (far - n.origins[0]);
  EXPECT_LT(along.cross(n.directions[0]).norm(), 1e-9);
}

TEST(Ndc, BackwardRayRejected) {
  RayBatch rays;
  rays.push({0, 0, 0}, {0, 0, 1}, 0.0);
  EXPECT_THROW(ndc_transform(rays, NdcParams{}), ConfigError);
}

TEST(Spherical, Examples) {
  const Eigen::Vector3d a = spherical_reparam({0, 0, 2});
  EXPECT_DOUBLE_EQ(a.x(), 0.0);
  EXPECT_DOUBLE_EQ(a.y(), 0.0);
  EXPECT_DOUBLE_EQ(a.z(), 0.5);
  const Eigen::Vector3d b = spherical_reparam({1, 0, 0});
  EXPECT_NEAR(b.x(), std::numbers::pi / 2, 1e-15);
  EXPECT_DOUBLE_EQ(b.y(), 0.0);
  EXPECT_DOUBLE_EQ(b.z(), 1.0);
  EXPECT_THROW(spherical_reparam({0, 0, 0}), ConfigError);
}

TEST(Spherical, RoundTrip) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    if (p.head<2>().norm() < 1e-3 * p.norm()) continue;
    const Eigen::Vector3d q = spherical_inverse(spherical_reparam(p));
    EXPECT_LT((q - p).norm(), 1e-6 * std::max(1.0, p.norm()));
  }
}

TEST(Sampling, EvenlySpacedWithoutJitter) {
  const AxisDomain unit = AxisDomain::cube(0.5);
  SamplingSpec spec;
  spec.n_samples = 4;
  RaySamples s;
  sample_ray({-1.0, 0.1, 0.2}, {1, 0, 0}, 0.5, unit, spec, 0, s);
  ASSERT_TRUE(s.hit);
  ASSERT_EQ(s.points.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(s.deltas[k], 0.25);
    EXPECT_NEAR(s.points[k][0], -0.5 + 0.125 + 0.25 * k, 1e-12);
    EXPECT_NEAR(s.distances[k], 0.5 + 0.125 + 0.25 * k, 1e-12);
  }
}

TEST(Sampling, MissIsEmpty) {
  SamplingSpec spec;
  RaySamples s;
  sample_ray({-1.0, 3.0, 0.0}, {1, 0, 0}, 0.5, AxisDomain::cube(0.5), spec, 0, s);
  EXPECT_FALSE(s.hit);
  EXPECT_TRUE(s.points.empty());
}

TEST(Sampling, JitterStaysInsideStrata) {
  SamplingSpec spec;
  spec.n_samples = 8;
  spec.jitter = true;
  spec.seed = 3;
  RaySamples a, b;
  sample_ray({-2.0, 0.0, 0.0}, {1, 0, 0}, 0.5, AxisDomain::cube(1.0), spec, 17, a);
  sample_ray({-2.0, 0.0, 0.0}, {1, 0, 0}, 0.5, AxisDomain::cube(1.0), spec, 17, b);
  EXPECT_EQ(a.distances, b.distances);
  for (int k = 0; k < 8; ++k) {
    EXPECT_GE(a.distances[k], 1.0 + 0.25 * k);
    EXPECT_LE(a.distances[k], 1.0 + 0.25 * (k + 1));
  }
}

TEST(Activation, Softplus) {
  EXPECT_DOUBLE_EQ(softplus(0.0), std::log(2.0));
  EXPECT_EQ(softplus(-1000.0), 0.0);
  EXPECT_NEAR(softplus(5.0), std::log(1.0 + std::exp(5.0)), 1e-12);
  EXPECT_NEAR(softplus(5.0), 5.00672, 1e-5);
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
  EXPECT_NEAR(softplus_grad(0.3), sigmoid(0.3), 1e-15);
}

TEST(Composite, OpaqueSample) {
  const std::vector<double> s{50.0}, d{1.0};
  const std::vector<Eigen::Vector3d> c{{0.2, 0.4, 0.6}};
  const auto r = composite(s, d, c);
  EXPECT_NEAR(r.weights[0], 1.0, 1e-20);
  EXPECT_LT((r.rgb - c[0]).norm(), 1e-20);
}

TEST(Composite, EmptySpace) {
  const std::vector<double> s(5, 0.0), d(5, 0.1);
  const std::vector<Eigen::Vector3d> c(5, Eigen::Vector3d::Ones());
  const auto r = composite(s, d, c);
  EXPECT_EQ(r.rgb, Eigen::Vector3d::Zero());
  EXPECT_EQ(r.acc, 0.0);
}

TEST(Composite, HandQuadrature) {
  const std::vector<double> s{std::log(2.0), std::log(2.0)}, d{1.0, 1.0};
  const std::vector<Eigen::Vector3d> c(2, Eigen::Vector3d::Ones());
  const auto r = composite(s, d, c);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-9);
  EXPECT_NEAR(r.weights[1], 0.25, 1e-9);
  EXPECT_NEAR(r.acc, 0.75, 1e-9);
}

TEST(Composite, LengthMismatch) {
  const std::vector<double> s{1.0, 2.0}, d{1.0};
  const std::vector<Eigen::Vector3d> c(2, Eigen::Vector3d::Ones());
  EXPECT_THROW(composite(s, d, c), ConfigError);
}

TEST(Composite, WeightsBoundedAndMonotone) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(u(rng) * 30);
    std::vector<double> s(n), d(n);
    std::vector<Eigen::Vector3d> c(n);
    for (int k = 0; k < n; ++k) {
      s[k] = -std::log(u(rng) + 1e-12) * 5;
      d[k] = u(rng) * 0.3;
      c[k] = Eigen::Vector3d(u(rng), u(rng), u(rng));
    }
    const auto r = composite(s, d, c);
    double sum = 0.0;
    for (double w : r.weights) {
      EXPECT_GE(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, r.acc, 1e-12);
    EXPECT_LE(r.acc, 1.0 + 1e-6);
    const int k = static_cast<int>(u(rng) * n);
    s[k] += u(rng) * 3;
    EXPECT_GE(composite(s, d, c).acc, r.acc - 1e-15);
  }
}

TEST(Composite, SegmentSplitInvariance) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 6;
    std::vector<double> s(n), d(n);
    std::vector<Eigen::Vector3d> c(n);
    for (int k = 0; k < n; ++k) {
      s[k] = u(rng) * 4;
      d[k] = 0.05 + u(rng) * 0.3;
      c[k] = Eigen::Vector3d(u(rng), u(rng), u(rng));
    }
    const int k = trial % n;
    const double f = 0.1 + 0.8 * u(rng);
    std::vector<double> s2 = s, d2 = d;
    std::vector<Eigen::Vector3d> c2 = c;
    d2[k] = f * d[k];
    d2.insert(d2.begin() + k + 1, (1 - f) * d[k]);
    s2.insert(s2.begin() + k + 1, s[k]);
    c2.insert(c2.begin() + k + 1, c[k]);
    const auto a = composite(s, d, c);
    const auto b = composite(s2, d2, c2);
    EXPECT_LT((a.rgb - b.rgb).norm(), 1e-6);
    EXPECT_NEAR(a.acc, b.acc, 1e-6);
  }
}

TEST(Mlp, ZeroWeightsGiveSigmoidBias) {
  TinyMLP mlp(TinyMLP::Config{4, 8, 2});
  const std::vector<double> feat{0.3, -1.0, 2.0, 0.5};
  const Eigen::Vector3d dir = Eigen::Vector3d(1, 1, 0).normalized();
  const Eigen::Vector3d zero = mlp.decode(feat, dir);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(zero[c], 0.5);
  mlp.bias(2) = {1.0f, -2.0f, 0.25f};
  const Eigen::Vector3d rgb = mlp.decode(feat, dir);
  EXPECT_DOUBLE_EQ(rgb[0], sigmoid(1.0));
  EXPECT_DOUBLE_EQ(rgb[1], sigmoid(-2.0));
  EXPECT_DOUBLE_EQ(rgb[2], sigmoid(0.25));
}

TEST(Mlp, ShapesAndRange) {
  std::mt19937_64 rng(1);
  TinyMLP mlp(TinyMLP::Config{27, 64, 2}, rng);
  EXPECT_EQ(mlp.input_dim(), 27 + 15);
  EXPECT_EQ(mlp.weight(0).size(), 64u * 42);
  EXPECT_EQ(mlp.weight(2).size(), 3u * 64);
  std::vector<double> feat(27, 0.7);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d rgb = mlp.decode(feat, random_unit(rng));
    for (int c = 0; c < 3; ++c) {
      EXPECT_GE(rgb[c], 0.0);
      EXPECT_LE(rgb[c], 1.0);
    }
  }
}

TEST(ViewEncoding, Layout) {
  double enc[15];
  const Eigen::Vector3d d(0.6, 0.0, 0.8);
  encode_view(d, 2, enc);
  EXPECT_EQ(view_encoding_dim(2), 15);
  EXPECT_DOUBLE_EQ(enc[0], 0.6);
  EXPECT_DOUBLE_EQ(enc[2], 0.8);
  double sum_sq = 0;
  for (int i = 3; i < 15; ++i) sum_sq += enc[i] * enc[i];
  EXPECT_NEAR(sum_sq, 6.0, 1e-12);  // sin^2 + cos^2 per (octave, axis)
}

TEST(Sh, DcOnlyIsConstantWhite) {
  std::vector<double> coeffs(27, 0.0);
  for (int c = 0; c < 3; ++c) coeffs[c * 9] = 1.0 / 0.28209479177387814;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d rgb = sh_decode(coeffs, random_unit(rng));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(rgb[c], 1.0, 1e-12);
  }
}

TEST(Sh, ZeroIsBlack) {
  const std::vector<double> coeffs(27, 0.0);
  EXPECT_EQ(sh_decode(coeffs, {0, 0, 1}), Eigen::Vector3d::Zero());
}

TEST(Sh, MatchesPolynomials) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> coeffs(27);
    for (auto& v : coeffs) v = u(rng);
    for (int c = 0; c < 3; ++c) coeffs[c * 9] = 1.5;  // keep away from the clamp
    const Eigen::Vector3d d = trial == 0 ? Eigen::Vector3d(0, 0, 1) : random_unit(rng);
    const auto y = sh_reference(d);
    const Eigen::Vector3d rgb = sh_decode(coeffs, d);
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int k = 0; k < 9; ++k) v += coeffs[c * 9 + k] * y[k];
      EXPECT_NEAR(rgb[c], std::clamp(v, 0.0, 1.0), 1e-6);
    }
  }
}

TEST(Voxel, ZeroDensityIsEmpty) {
  const auto v = build_emptiness_voxel([](const Point4&) { return 0.0; }, AxisDomain::cube(1.0), 8, 3, 0.1);
  EXPECT_EQ(v.occupied_count(), 0u);
}

TEST(Voxel, SphereCellsOccupied) {
  const double radius = 0.55;
  auto sigma = [&](const Point4& p) { return std::hypot(p[0], p[1], p[2]) < radius ? 10.0 : 0.0; };
  const auto v = build_emptiness_voxel(sigma, AxisDomain::cube(1.0), 16, 2, 1.0);
  std::size_t inside = 0;
  for (int x = 0; x < 16; ++x) {
    for (int y = 0; y < 16; ++y) {
      for (int z = 0; z < 16; ++z) {
        const Point4 c = v.cell_center(x, y, z);
        if (std::hypot(c[0], c[1], c[2]) < radius) {
          ++inside;
          EXPECT_TRUE(v.occupancy[v.cell(x, y, z)]);
        }
      }
    }
  }
  EXPECT_GT(inside, 0u);
  EXPECT_LT(v.occupied_count(), 16u * 16 * 16);
}

TEST(Voxel, MaxOverTime) {
  auto sigma = [](const Point4& p) { return std::abs(p[3] - 0.9) < 0.02 && p[0] > 0.5 ? 1.0 : 0.0; };
  const auto v = build_emptiness_voxel(sigma, AxisDomain::cube(1.0), 8, 11, 0.5);
  EXPECT_GT(v.occupied_count(), 0u);
}

TEST(Voxel, SkippedCellsAreBelowThreshold) {
  ModelConfig c;
  c.resolution = {8, 8, 8, 4};
  c.opacity_ranks = {2, 2, 2};
  c.init_scale = 1.0f;
  std::mt19937_64 rng(5);
  const auto field = make_field(c, true, rng);
  const double threshold = 0.13;
  const auto v = build_emptiness_voxel(*field, c.density_shift, 10, 4, threshold);
  ASSERT_GT(v.occupied_count(), 0u);
  ASSERT_LT(v.occupied_count(), 1000u);
  std::vector<double> raw(1);
  for (int x = 0; x < 10; ++x) {
    for (int y = 0; y < 10; ++y) {
      for (int z = 0; z < 10; ++z) {
        if (v.occupancy[v.cell(x, y, z)]) continue;
        Point4 p = v.cell_center(x, y, z);
        for (int k = 0; k < 4; ++k) {
          p[3] = k / 3.0;
          field->query(p, raw);
          EXPECT_LT(softplus(raw[0] + c.density_shift), threshold);
        }
      }
    }
  }
}

TEST(Render, EmptyFieldsAreBlack) {
  const AxisDomain d = AxisDomain::cube(1.0);
  const LambdaField opacity(d, 1, [](const Point4&, std::span<double> o) { o[0] = -1000.0; });
  const LambdaField appearance = constant_colour(d, {1, 1, 1});
  const SHDecoder sh;
  const Camera cam = Camera::from_fov(8, 8, 0.8, look_at({0, -3, 0}, {0, 0, 0}));
  const RenderOutput out = render_rays({&opacity, &appearance, &sh, nullptr}, rays_for_camera(cam, 0.5),
                                       plain_settings());
  for (std::size_t i = 0; i < out.rgb.size(); ++i) {
    EXPECT_EQ(out.rgb[i], Eigen::Vector3d::Zero());
    EXPECT_EQ(out.acc[i], 0.0);
  }
  EXPECT_EQ(out.stats.appearance_queries, 0u);
}

TEST(Render, SlabDepth) {
  const AxisDomain d = AxisDomain::cube(1.0);
  const double slab_lo = 0.2, slab_hi = 0.5;
  const LambdaField opacity(d, 1, [&](const Point4& p, std::span<double> o) {
    o[0] = p[0] >= slab_lo && p[0] <= slab_hi ? 400.0 : -1000.0;
  });
  const LambdaField appearance = constant_colour(d, {0.2, 0.5, 0.9});
  const SHDecoder sh;
  RayBatch rays;
  rays.push({-2.0, 0.1, -0.3}, {1, 0, 0}, 0.5);
  rays.push({-2.0, 0.4, 0.6}, Eigen::Vector3d(1, 0.1, -0.05).normalized(), 0.5);
  const int n = 64;
  const RenderOutput out = render_rays({&opacity, &appearance, &sh, nullptr}, rays, plain_settings(n));
  // Entry distance of each ray into the plane x = slab_lo.
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const double entry = (slab_lo - rays.origins[i].x()) / rays.directions[i].x();
    double enter = 0, exit = 0;
    ASSERT_TRUE(intersect_box(rays.origins[i], rays.directions[i], d.space_min, d.space_max, 0, 1e9, enter, exit));
    const double spacing = (exit - enter) / n;
    EXPECT_NEAR(out.depth[i], entry, spacing);
    EXPECT_NEAR(out.acc[i], 1.0, 1e-9);
    // Samples under the appearance cutoff contribute no colour.
    EXPECT_LT((out.rgb[i] - Eigen::Vector3d(0.2, 0.5, 0.9)).norm(), 1e-3);
  }
}

TEST(Render, ThreadCountDoesNotChangeOutput) {
  ModelConfig c;
  c.resolution = {6, 6, 6, 4};
  c.opacity_ranks = {2, 2, 2};
  c.appearance_ranks = {2, 2, 2};
  c.feature_dim = 5;
  c.mlp_hidden = 8;
  c.init_scale = 1.0f;
  c.n_samples = 16;
  const Model m(c, 3);
  const Camera cam = Camera::from_fov(16, 12, 0.9, look_at({2.5, 1.0, 1.0}, {0, 0, 0}));
  RenderSettings s = m.render_settings(1);
  s.sampling.jitter = true;
  s.sampling.seed = 9;
  s.chunk_rays = 32;
  const RenderOutput a = render_rays(m.view(), m.rays(cam, 0.3), s);
  s.threads = 4;
  const RenderOutput b = render_rays(m.view(), m.rays(cam, 0.3), s);
  EXPECT_EQ(a.rgb, b.rgb);
  EXPECT_EQ(a.depth, b.depth);
}

TEST(Render, VoxelSkipsSamples) {
  const AxisDomain d = AxisDomain::cube(1.0);
  auto sigma_of = [](const Point4& p) { return std::hypot(p[0], p[1], p[2]) < 0.4 ? 60.0 : -1000.0; };
  const LambdaField opacity(d, 1, [&](const Point4& p, std::span<double> o) { o[0] = sigma_of(p); });
  const LambdaField appearance = constant_colour(d, {0.8, 0.3, 0.1});
  const SHDecoder sh;
  const RenderSettings s = plain_settings(48);
  const auto voxel = build_emptiness_voxel(
      [&](const Point4& p) { return softplus(sigma_of(p) + s.density_shift); }, d, 16, 1, 1e-3);
  const Camera cam = Camera::from_fov(16, 16, 0.9, look_at({0, -3, 0.5}, {0, 0, 0}));
  const RayBatch rays = rays_for_camera(cam, 0.5);
  const RenderOutput full = render_rays({&opacity, &appearance, &sh, nullptr}, rays, s);
  const RenderOutput skip = render_rays({&opacity, &appearance, &sh, &voxel}, rays, s);
  EXPECT_GT(skip.stats.skipped, skip.stats.samples / 2);
  for (std::size_t i = 0; i < rays.size(); ++i) EXPECT_LT((full.rgb[i] - skip.rgb[i]).norm(), 1e-9);
}

TEST(DepthFile, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "hexplane_depth_test.dpth";
  const std::vector<double> depth{1.0, 2.5, 3.25, 0.0, 9.0, 4.0};
  save_depth(path, 3, 2, depth);
  int w = 0, h = 0;
  const auto back = load_depth(path, w, h);
  EXPECT_EQ(w, 3);
  EXPECT_EQ(h, 2);
  for (std::size_t i = 0; i < depth.size(); ++i) EXPECT_EQ(back[i], static_cast<float>(depth[i]));
  std::filesystem::remove(path);
}
