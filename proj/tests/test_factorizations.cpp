#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hexplane/factorizations.hpp"
#include "support/dense_oracles.hpp"

using namespace hexplane;
using fixtures::node_u;
using fixtures::worst_node_error;

namespace {

VMTField ones_vmt() {
  VMTConfig c;
  c.resolution = {3, 3, 3, 3};
  c.ranks = {1, 1, 1};
  c.feature_dim = 1;
  std::mt19937_64 rng(0);
  VMTField f(c, rng);
  for (auto& g : f.groups()) {
    std::fill(g.plane.data.begin(), g.plane.data.end(), 1.0f);
    std::fill(g.line.data.begin(), g.line.data.end(), 1.0f);
  }
  for (auto& l : f.time_lines()) std::fill(l.data.begin(), l.data.end(), 1.0f);
  std::fill(f.features().data.begin(), f.features().data.end(), 1.0f);
  return f;
}

}  // namespace

TEST(TimeLineTest, Midpoint) {
  TimeLine line(Axis::T, 2, 1);
  line.at(0, 0) = 0;
  line.at(1, 0) = 2;
  double out = 0;
  eval_timeline(line, 0.5, {&out, 1});
  EXPECT_DOUBLE_EQ(out, 1.0);
  eval_timeline(line, 0.0, {&out, 1});
  EXPECT_EQ(out, 0.0);
}

TEST(TimeLineTest, RandomMatchesTwoPointLerp) {
  std::mt19937_64 rng(4);
  TimeLine line(Axis::T, 7, 3);
  fill_uniform(line.data, rng, 1.0f);
  const double t = 0.37;
  const double x = t * 6;
  const int i = static_cast<int>(x);
  const double w = x - i;
  std::vector<double> out(3);
  eval_timeline(line, t, out);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(out[c], (1 - w) * line.at(i, c) + w * line.at(i + 1, c), 1e-12);
}

TEST(TimeLineTest, FirstRowExact) {
  std::mt19937_64 rng(1);
  TimeLine line(Axis::T, 5, 4);
  fill_uniform(line.data, rng, 1.0f);
  std::vector<double> out(4);
  eval_timeline(line, 0.0, out);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(out[c], static_cast<double>(line.at(0, c)));
}

TEST(VMT, GroupAxesFollowFactorization) {
  const auto axes = vm_group_axes();
  EXPECT_EQ(axes[0], (std::array<Axis, 3>{Axis::X, Axis::Y, Axis::Z}));
  EXPECT_EQ(axes[1], (std::array<Axis, 3>{Axis::X, Axis::Z, Axis::Y}));
  EXPECT_EQ(axes[2], (std::array<Axis, 3>{Axis::Z, Axis::Y, Axis::X}));
}

TEST(VMT, OnesGiveThree) {
  const VMTField f = ones_vmt();
  EXPECT_DOUBLE_EQ(f.query({0.2, -0.4, 0.9, 0.3})[0], 3.0);
}

TEST(VMT, ZeroTimeLineSilencesGroup) {
  VMTField f = ones_vmt();
  std::fill(f.time_lines()[0].data.begin(), f.time_lines()[0].data.end(), 0.0f);
  EXPECT_DOUBLE_EQ(f.query({0.2, -0.4, 0.9, 0.3})[0], 2.0);
}

TEST(VMT, NodesMatchDenseExpansion) {
  VMTConfig c;
  c.resolution = {4, 5, 3, 4};
  c.ranks = {2, 3, 1};
  c.feature_dim = 3;
  c.init_scale = 1.0f;
  std::mt19937_64 rng(17);
  const VMTField f(c, rng);
  const double worst = worst_node_error(f, c.resolution, [&](const auto& idx) { return fixtures::vmt_dense(f, idx); });
  EXPECT_LE(worst, 1e-5);
}

TEST(VMT, EqualTimeRowsAreTimeInvariant) {
  VMTConfig c;
  c.resolution = {4, 4, 4, 2};
  c.ranks = {2, 2, 2};
  c.feature_dim = 2;
  std::mt19937_64 rng(3);
  VMTField f(c, rng);
  for (auto& tl : f.time_lines()) {
    for (int r = 0; r < tl.channels; ++r) tl.at(1, r) = tl.at(0, r);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Point4 a{u(rng), u(rng), u(rng), u(rng)};
    Point4 b = a;
    b[3] = u(rng);
    std::vector<double> qa(2), qb(2);
    f.query_normalized(a, qa);
    f.query_normalized(b, qb);
    EXPECT_EQ(qa, qb);
  }
}

TEST(CP, OnesGiveRankTimesRowSum) {
  CPConfig c;
  c.resolution = {3, 3, 3, 3};
  c.rank = 4;
  c.feature_dim = 2;
  std::mt19937_64 rng(0);
  CPField f(c, rng);
  for (auto& l : f.lines()) std::fill(l.data.begin(), l.data.end(), 1.0f);
  std::fill(f.features().data.begin(), f.features().data.end(), 1.0f);
  const auto q = f.query({0.3, 0.1, -0.7, 0.6});
  // Every feature row is (1, 1): each output channel sums R rows.
  EXPECT_DOUBLE_EQ(q[0], 4.0);
  EXPECT_DOUBLE_EQ(q[1], 4.0);
}

TEST(CP, ZeroTimeLineGivesZero) {
  CPConfig c;
  c.resolution = {3, 3, 3, 3};
  c.rank = 3;
  c.feature_dim = 2;
  std::mt19937_64 rng(1);
  CPField f(c, rng);
  auto& tl = f.lines()[static_cast<int>(Axis::T)];
  std::fill(tl.data.begin(), tl.data.end(), 0.0f);
  for (double v : f.query({0.3, 0.1, -0.7, 0.6})) EXPECT_EQ(v, 0.0);
}

TEST(CP, NodesMatchDenseExpansion) {
  CPConfig c;
  c.resolution = {4, 3, 5, 3};
  c.rank = 5;
  c.feature_dim = 3;
  c.init_scale = 1.0f;
  std::mt19937_64 rng(23);
  const CPField f(c, rng);
  const double worst = worst_node_error(f, c.resolution, [&](const auto& idx) { return fixtures::cp_dense(f, idx); });
  EXPECT_LE(worst, 1e-5);
}

TEST(CP, EmbedsIntoHexPlane) {
  CPConfig c;
  c.resolution = {5, 4, 6, 4};
  c.rank = 6;
  c.feature_dim = 4;
  c.init_scale = 1.0f;
  std::mt19937_64 rng(31);
  const CPField cp(c, rng);
  const HexPlaneField hp = embed_cp_in_hexplane(cp);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Point4 p{u(rng), u(rng), u(rng), u(rng)};
    std::vector<double> a(4), b(4);
    cp.query_normalized(p, a);
    hp.query_normalized(p, b);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(a[k], b[k], 1e-6);
  }
}

TEST(VolumeBasis, SingleConstantBasisIsStatic) {
  VolumeBasisConfig c;
  c.resolution = {4, 4, 4, 3};
  c.basis_count = 1;
  c.ranks = {2, 2, 2};
  c.feature_dim = 3;
  std::mt19937_64 rng(5);
  VolumeBasisField f(c, rng);
  std::fill(f.weights().data.begin(), f.weights().data.end(), 1.0f);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Point4 p{u(rng), u(rng), u(rng), u(rng)};
    std::vector<double> a(3), b(3);
    f.query_normalized(p, a);
    query_static_volume(f.volumes()[0], p, b);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(VolumeBasis, ZeroWeightsGiveZero) {
  VolumeBasisConfig c;
  c.resolution = {3, 3, 3, 3};
  c.basis_count = 3;
  c.ranks = {1, 2, 1};
  c.feature_dim = 2;
  std::mt19937_64 rng(6);
  VolumeBasisField f(c, rng);
  std::fill(f.weights().data.begin(), f.weights().data.end(), 0.0f);
  for (double v : f.query({0.3, 0.1, -0.7, 0.6})) EXPECT_EQ(v, 0.0);
}

TEST(VolumeBasis, NodesMatchDenseExpansion) {
  VolumeBasisConfig c;
  c.resolution = {4, 3, 4, 5};
  c.basis_count = 3;
  c.ranks = {2, 1, 3};
  c.feature_dim = 3;
  c.init_scale = 1.0f;
  std::mt19937_64 rng(41);
  const VolumeBasisField f(c, rng);
  const double worst = worst_node_error(f, c.resolution, [&](const auto& idx) { return fixtures::volume_basis_dense(f, idx); });
  EXPECT_LE(worst, 1e-5);
}

TEST(FieldContract, AllKindsFiniteAndDeterministic) {
  std::mt19937_64 rng(2);
  std::vector<std::unique_ptr<Field>> fields;
  fields.push_back(std::make_unique<VMTField>(VMTConfig{{6, 6, 6, 4}, {3, 3, 3}, 5}, rng));
  fields.push_back(std::make_unique<CPField>(CPConfig{{6, 6, 6, 4}, 8, 5}, rng));
  fields.push_back(std::make_unique<VolumeBasisField>(VolumeBasisConfig{{6, 6, 6, 4}, 2, {2, 2, 2}, 5}, rng));
  HexPlaneConfig hc;
  hc.resolution = {6, 6, 6, 4};
  hc.ranks = {3, 3, 3};
  hc.feature_dim = 5;
  fields.push_back(std::make_unique<HexPlaneField>(hc, rng));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& f : fields) {
    const auto copy = f->clone();
    for (int i = 0; i < 30; ++i) {
      const Point4 p{u(rng), u(rng), u(rng), 0.5 * (u(rng) + 1)};
      const auto a = f->query(p);
      EXPECT_EQ(a, copy->query(p));
      for (double v : a) EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_THROW(f->query({0, 0, 0, 2.0}), DomainError);
  }
}

TEST(FieldContract, UpsamplePreservesOldNodes) {
  std::mt19937_64 rng(9);
  std::vector<std::unique_ptr<Field>> fields;
  fields.push_back(std::make_unique<VMTField>(VMTConfig{{5, 5, 5, 3}, {2, 2, 2}, 2}, rng));
  fields.push_back(std::make_unique<CPField>(CPConfig{{5, 5, 5, 3}, 3, 2}, rng));
  fields.push_back(std::make_unique<VolumeBasisField>(VolumeBasisConfig{{5, 5, 5, 3}, 2, {2, 2, 2}, 2}, rng));
  for (const auto& f : fields) {
    const auto before = f->clone();
    f->upsample({9, 9, 9, 5});
    EXPECT_EQ(f->resolution(), (GridResolution{9, 9, 9, 5}));
    std::vector<double> a(2), b(2);
    for (int i = 0; i < 5; ++i) {
      const Point4 p{node_u(i, 5), node_u(4 - i, 5), node_u(i, 5), node_u(i % 3, 3)};
      before->query_normalized(p, a);
      f->query_normalized(p, b);
      for (int k = 0; k < 2; ++k) EXPECT_NEAR(a[k], b[k], 1e-6);
    }
  }
}
