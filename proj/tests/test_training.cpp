#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hexplane/loss.hpp"
#include "hexplane/metrics.hpp"
#include "hexplane/trainer.hpp"
#include "support/scenes.hpp"

using namespace hexplane;

namespace {

SyntheticConfig tiny_scene() {
  SyntheticConfig s;
  s.n_cameras = 4;
  s.n_times = 3;
  s.width = 16;
  s.height = 16;
  s.gt_samples = 128;
  return s;
}

std::vector<std::vector<float>> snapshot(Model& m) {
  const ParamStore params = m.params();
  std::vector<std::vector<float>> out;
  for (const auto& s : params.slabs()) out.emplace_back(s.values.begin(), s.values.end());
  return out;
}

}  // namespace

TEST(PhotometricLoss, IdenticalIsZero) {
  std::vector<Eigen::Vector3d> a{{0.1, 0.2, 0.3}, {1, 0, 0.5}};
  EXPECT_EQ(photometric_loss(a, a), 0.0);
}

TEST(PhotometricLoss, UniformOffset) {
  std::vector<Eigen::Vector3d> a(7, Eigen::Vector3d(0.3, 0.4, 0.5));
  std::vector<Eigen::Vector3d> b(7, Eigen::Vector3d(0.4, 0.5, 0.6));
  EXPECT_NEAR(photometric_loss(a, b), 0.01, 1e-12);
}

TEST(PhotometricLoss, MatchesDirectSum) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Eigen::Vector3d> a(13), b(13);
  for (auto& v : a) v = {u(rng), u(rng), u(rng)};
  for (auto& v : b) v = {u(rng), u(rng), u(rng)};
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int c = 0; c < 3; ++c) sum += (a[i][c] - b[i][c]) * (a[i][c] - b[i][c]);
  EXPECT_NEAR(photometric_loss(a, b), sum / 39.0, 1e-14);
}

TEST(PhotometricLoss, SizeMismatchRejected) {
  std::vector<Eigen::Vector3d> a(3), b(4);
  EXPECT_THROW(photometric_loss(a, b), ConfigError);
}

TEST(PhotometricLoss, GradientMatchesFiniteDifference) {
  std::vector<Eigen::Vector3d> a{{0.1, 0.7, 0.3}, {0.9, 0.2, 0.5}, {0.4, 0.4, 0.4}};
  std::vector<Eigen::Vector3d> b{{0.2, 0.1, 0.3}, {0.0, 0.6, 0.8}, {0.5, 0.5, 0.1}};
  const double h = 1e-6;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Eigen::Vector3d g = photometric_grad(a[i], b[i], a.size());
    for (int c = 0; c < 3; ++c) {
      auto p = a, m = a;
      p[i][c] += h;
      m[i][c] -= h;
      EXPECT_NEAR(g[c], (photometric_loss(p, b) - photometric_loss(m, b)) / (2 * h), 1e-8);
    }
  }
}

TEST(TotalVariation, ConstantPlaneIsZero) {
  FeaturePlane p(Axis::X, Axis::T, 5, 4, 3);
  std::fill(p.data.begin(), p.data.end(), 0.7f);
  EXPECT_EQ(tv_loss(p, 1.0, 1.0), 0.0);
}

TEST(TotalVariation, HandValueTwoByTwo) {
  // [[0,1],[0,1]]: no change along a, unit steps along b.
  FeaturePlane xy(Axis::X, Axis::Y, 2, 2, 1);
  xy.data = {0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(tv_loss(xy, 0.5, 3.0), 0.5);
  FeaturePlane xt(Axis::X, Axis::T, 2, 2, 1);
  xt.data = {0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(tv_loss(xt, 0.5, 3.0), 3.0);
  FeaturePlane tx(Axis::T, Axis::X, 2, 2, 1);
  tx.data = {0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(tv_loss(tx, 0.5, 3.0), 0.5);
}

TEST(TotalVariation, DirectOracle) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> n(0, 1);
  FeaturePlane p(Axis::Y, Axis::T, 4, 6, 2);
  for (auto& v : p.data) v = n(rng);
  double sa = 0, sb = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j)
      for (int c = 0; c < 2; ++c) {
        if (i + 1 < 4) sa += std::pow(double(p.at(i + 1, j, c)) - p.at(i, j, c), 2);
        if (j + 1 < 6) sb += std::pow(double(p.at(i, j + 1, c)) - p.at(i, j, c), 2);
      }
  const double expect = 0.2 * sa / (3 * 6 * 2) + 0.9 * sb / (4 * 5 * 2);
  EXPECT_NEAR(tv_loss(p, 0.2, 0.9), expect, 1e-12);
}

TEST(TotalVariation, ScalingAndShift) {
  std::mt19937_64 rng(6);
  std::normal_distribution<float> n(0, 1);
  FeaturePlane p(Axis::X, Axis::Z, 5, 5, 2);
  for (auto& v : p.data) v = n(rng);
  const double base = tv_loss(p, 1.0, 0.0);
  FeaturePlane twice = p, shifted = p;
  for (auto& v : twice.data) v *= 2.0f;
  for (auto& v : shifted.data) v += 0.25f;
  EXPECT_NEAR(tv_loss(twice, 1.0, 0.0), 4.0 * base, 1e-9);
  EXPECT_NEAR(tv_loss(shifted, 1.0, 0.0), base, 1e-5);
}

TEST(TotalVariation, DenseSlabsIgnoredAndGradientMatches) {
  std::vector<float> grid(3 * 4 * 2), dense(5, 3.0f);
  std::mt19937_64 rng(7);
  std::normal_distribution<float> n(0, 1);
  for (auto& v : grid) v = n(rng);
  dense = {1, -4, 9, 0, 2};
  std::vector<ParamView> slabs{{"g", {3, 4, 2}, {Axis::Z, Axis::T}, grid, ParamGroup::Grid},
                               {"d", {5}, {}, dense, ParamGroup::Dense}};
  std::vector<float> g0(grid.size(), 0.0f), g1(dense.size(), 0.0f);
  std::vector<std::span<float>> spans{g0, g1};
  const double loss = tv_loss(slabs, 0.3, 0.7, spans);
  EXPECT_GT(loss, 0.0);
  for (float v : g1) EXPECT_EQ(v, 0.0f);
  const double h = 1e-3;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const float keep = grid[i];
    grid[i] = keep + static_cast<float>(h);
    const double up = tv_loss(slabs, 0.3, 0.7);
    grid[i] = keep - static_cast<float>(h);
    const double dn = tv_loss(slabs, 0.3, 0.7);
    grid[i] = keep;
    EXPECT_NEAR(g0[i], (up - dn) / (2 * h), 1e-4);
  }
}

TEST(TrainConfigCheck, RejectsBadValues) {
  auto bad = [](auto mutate) {
    TrainConfig c;
    c.total_iters = 100;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](TrainConfig& c) { c.batch_rays = 0; });
  bad([](TrainConfig& c) { c.total_iters = -1; });
  bad([](TrainConfig& c) { c.lr_grid = -0.1; });
  bad([](TrainConfig& c) { c.lr_decay_ratio = 0.0; });
  bad([](TrainConfig& c) { c.tv_temporal = -1.0; });
  bad([](TrainConfig& c) { c.upsample_iters = {50}; });
  bad([](TrainConfig& c) {
    c.upsample_iters = {60, 40};
    c.upsample_resolutions = {{8, 8, 8, 4}, {9, 9, 9, 4}};
  });
  bad([](TrainConfig& c) { c.voxel_iters = {100}; });
  bad([](TrainConfig& c) { c.log_every = 0; });
  TrainConfig ok;
  ok.total_iters = 100;
  ok.upsample_iters = {10};
  ok.upsample_resolutions = {{8, 8, 8, 4}};
  EXPECT_NO_THROW(ok.validate());
}

class TrainingRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { data_ = new Dataset(fixtures::make_dataset(tiny_scene())); }
  static void TearDownTestSuite() {
    delete data_;
    data_ = nullptr;
  }
  static ModelConfig model_config() { return fixtures::small_model(*data_->bounds); }
  static Dataset* data_;
};

Dataset* TrainingRun::data_ = nullptr;

TEST_F(TrainingRun, ZeroIterationsLeaveModelUntouched) {
  Model m(model_config(), 3);
  const auto before = snapshot(m);
  const TrainLog log = train(m, *data_, fixtures::short_schedule(0, 3));
  EXPECT_TRUE(log.rows.empty());
  EXPECT_EQ(snapshot(m), before);
}

TEST_F(TrainingRun, EmptyDatasetRejected) {
  Model m(model_config(), 3);
  EXPECT_THROW(train(m, Dataset{}, fixtures::short_schedule(5, 3)), ConfigError);
}

TEST_F(TrainingRun, DeterministicAcrossRunsAndThreads) {
  TrainConfig t = fixtures::short_schedule(30, 11);
  t.voxel_iters = {10};
  t.log_every = 5;
  Model a(model_config(), 4), b(model_config(), 4), c(model_config(), 4);
  const std::string la = train(a, *data_, t).to_csv(false);
  const std::string lb = train(b, *data_, t).to_csv(false);
  t.threads = 4;
  const std::string lc = train(c, *data_, t).to_csv(false);
  EXPECT_EQ(la, lb);
  EXPECT_EQ(la, lc);
  EXPECT_EQ(snapshot(a), snapshot(c));
}

TEST_F(TrainingRun, LossDecreases) {
  std::vector<double> ratios;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Model m(model_config(), seed);
    TrainConfig t = fixtures::short_schedule(500, seed);
    t.log_every = 50;
    const TrainLog log = train(m, *data_, t);
    ASSERT_EQ(log.rows.size(), 10u);
    ratios.push_back(log.rows.back().loss / log.rows.front().loss);
  }
  std::nth_element(ratios.begin(), ratios.begin() + 2, ratios.end());
  EXPECT_LT(ratios[2], 1.0);
}

TEST_F(TrainingRun, ZeroGridRateFreezesPlanes) {
  Model m(model_config(), 8);
  ParamStore before_store = m.params();
  std::vector<std::vector<float>> before;
  for (const auto& s : before_store.slabs()) before.emplace_back(s.values.begin(), s.values.end());
  TrainConfig t = fixtures::short_schedule(20, 8);
  t.lr_grid = 0.0;
  train(m, *data_, t);
  ParamStore after = m.params();
  bool dense_moved = false;
  for (std::size_t i = 0; i < after.size(); ++i) {
    const auto& s = after.slabs()[i];
    const bool same = std::equal(s.values.begin(), s.values.end(), before[i].begin());
    if (s.group == ParamGroup::Grid) {
      EXPECT_TRUE(same) << s.name;
    } else if (!same) {
      dense_moved = true;
    }
  }
  EXPECT_TRUE(dense_moved);
}

TEST_F(TrainingRun, NonFiniteTargetsDiverge) {
  Dataset bad = *data_;
  for (auto& f : bad.frames) std::fill(f.image.data.begin(), f.image.data.end(), std::numeric_limits<float>::quiet_NaN());
  Model m(model_config(), 9);
  EXPECT_THROW(train(m, bad, fixtures::short_schedule(5, 9)), DivergenceError);
}

TEST_F(TrainingRun, UpsampleMilestonesFire) {
  Model m(model_config(), 10);
  TrainConfig t = fixtures::short_schedule(12, 10);
  t.upsample_iters = {4, 8};
  t.upsample_resolutions = {{14, 14, 14, 6}, {16, 16, 16, 8}};
  t.voxel_iters = {6};
  std::vector<std::pair<TrainEventKind, std::int64_t>> events;
  std::vector<GridResolution> seen;
  train(m, *data_, t, [&](const TrainEvent& e, Model& model) {
    if (e.kind == TrainEventKind::Logged) return;
    events.emplace_back(e.kind, e.iteration);
    seen.push_back(model.opacity().resolution());
  });
  const std::vector<std::pair<TrainEventKind, std::int64_t>> expect{
      {TrainEventKind::BeforeUpsample, 4}, {TrainEventKind::AfterUpsample, 4}, {TrainEventKind::VoxelBuilt, 6},
      {TrainEventKind::BeforeUpsample, 8}, {TrainEventKind::AfterUpsample, 8}};
  EXPECT_EQ(events, expect);
  EXPECT_EQ(seen[0], (GridResolution{12, 12, 12, 6}));
  EXPECT_EQ(seen[1], (GridResolution{14, 14, 14, 6}));
  EXPECT_EQ(seen[4], (GridResolution{16, 16, 16, 8}));
  EXPECT_EQ(m.appearance().resolution(), (GridResolution{16, 16, 16, 8}));
}

TEST_F(TrainingRun, LogRowsFollowSchedule) {
  Model m(model_config(), 12);
  TrainConfig t = fixtures::short_schedule(25, 12);
  t.log_every = 10;
  const TrainLog log = train(m, *data_, t);
  ASSERT_EQ(log.rows.size(), 3u);
  EXPECT_EQ(log.rows[0].iteration, 10);
  EXPECT_EQ(log.rows[2].iteration, 25);
  const ParamCount a = m.opacity().param_count(), b = m.appearance().param_count();
  EXPECT_EQ(log.rows[0].plane_params, a.plane_params + b.plane_params);
  const std::string csv = log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,loss,psnr,seconds,plane_params,basis_params");
}

TEST_F(TrainingRun, EvaluateOnOwnRendersIsPerfect) {
  Model m(model_config(), 13);
  const RenderSettings rs = m.render_settings();
  Dataset own = *data_;
  own.frames.resize(2);
  for (auto& f : own.frames) f.image = render_image(m, f.camera, f.time, rs);
  const EvalResult r = evaluate(m, own, rs);
  ASSERT_EQ(r.images.size(), 2u);
  EXPECT_DOUBLE_EQ(r.mean_psnr, 99.0);
  EXPECT_NEAR(r.mean_ssim, 1.0, 1e-12);
}
