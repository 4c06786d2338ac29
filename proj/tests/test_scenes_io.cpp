#include <gtest/gtest.h>

#include <png.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "hexplane/dataset.hpp"
#include "hexplane/metrics.hpp"
#include "hexplane/scene.hpp"

using namespace hexplane;
namespace fs = std::filesystem;

namespace {

Image random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h);
  for (auto& v : img.data) v = u(rng);
  return img;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hexplane_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Gaussian-window SSIM on luminance computed with a full 2D window sum.
double ssim_oracle(const Image& a, const Image& b) {
  auto lum = [](const Image& im, int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * im.width + x;
    return 0.299 * im.data[3 * i] + 0.587 * im.data[3 * i + 1] + 0.114 * im.data[3 * i + 2];
  };
  double w[11][11], total = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) total += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  const double c1 = 1e-4, c2 = 9e-4;
  double sum = 0;
  int count = 0;
  for (int y = 0; y + 11 <= a.height; ++y)
    for (int x = 0; x + 11 <= a.width; ++x) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double k = w[i][j] / total, p = lum(a, x + j, y + i), q = lum(b, x + j, y + i);
          mx += k * p;
          my += k * q;
          xx += k * p * p;
          yy += k * q * q;
          xy += k * p * q;
        }
      const double vx = xx - mx * mx, vy = yy - my * my, cov = xy - mx * my;
      sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return sum / count;
}

void write_rgba_png(const fs::path& path, int w, int h, const std::vector<std::uint8_t>& rgba) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_RGBA;
  ASSERT_TRUE(png_image_write_to_file(&image, path.c_str(), 0, rgba.data(), 0, nullptr));
}

nlohmann::json identity_matrix() { return {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}; }

void write_json(const fs::path& path, const nlohmann::json& j) { std::ofstream(path) << j.dump(2); }

}  // namespace

TEST(Psnr, KnownMse) {
  Image a(4, 4), b(4, 4);
  for (auto& v : b.data) v = 0.1f;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
  EXPECT_EQ(psnr_from_mse(0.0), kPsnrCap);
  EXPECT_NEAR(psnr_from_mse(1e-3), 30.0, 1e-12);
}

TEST(Psnr, SymmetricAndShiftInvariant) {
  const Image a = random_image(9, 7, 1), b = random_image(9, 7, 2);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  Image a2 = a, b2 = b;
  for (auto& v : a2.data) v += 0.5f;
  for (auto& v : b2.data) v += 0.5f;
  EXPECT_NEAR(psnr(a2, b2), psnr(a, b), 1e-5);
}

TEST(Psnr, MatchesFormula) {
  const Image a = random_image(8, 8, 3), b = random_image(8, 8, 4);
  double sum = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) sum += std::pow(double(a.data[i]) - b.data[i], 2);
  EXPECT_NEAR(psnr(a, b), -10.0 * std::log10(sum / a.data.size()), 1e-10);
}

TEST(Psnr, ShapeMismatchRejected) { EXPECT_THROW(psnr(Image(3, 3), Image(3, 4)), ConfigError); }

TEST(Ssim, IdenticalIsOne) {
  const Image a = random_image(20, 16, 5);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, InvertedImageIsNegative) {
  Image a(24, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) a.set_pixel(static_cast<std::size_t>(y) * 24 + x, Eigen::Vector3d::Constant((x + y) % 5 / 4.0));
  Image b = a;
  for (auto& v : b.data) v = 1.0f - v;
  EXPECT_LT(ssim(a, b), 0.0);
}

TEST(Ssim, MatchesDirectWindowSum) {
  const Image a = random_image(19, 15, 6);
  Image b = a;
  std::mt19937_64 rng(7);
  std::normal_distribution<float> n(0.0f, 0.1f);
  for (auto& v : b.data) v += n(rng);
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
}

TEST(Ssim, TooSmallRejected) { EXPECT_THROW(ssim(Image(10, 20), Image(10, 20)), ConfigError); }

TEST(AnalyticScene, EmptySceneRendersBlack) {
  const AnalyticScene s = AnalyticScene::make(SceneKind::Empty);
  const Camera cam = Camera::from_fov(9, 9, 0.7, look_at({3, 1, 2}, {0, 0, 0}));
  const Image img = render_analytic(s, cam, 0.5, 64);
  for (float v : img.data) EXPECT_EQ(v, 0.0f);
}

TEST(AnalyticScene, StaticSphereCenterPixel) {
  const AnalyticScene s = AnalyticScene::make(SceneKind::StaticSphere);
  const Eigen::Vector3d eye(2.0, -3.0, 1.5);
  const Camera cam = Camera::from_fov(33, 33, 0.7, look_at(eye, {0, 0, 0}));
  const Image img = render_analytic(s, cam, 0.0, 512);
  // The central ray hits the surface point closest to the camera.
  const Eigen::Vector3d expect = (Eigen::Vector3d::Constant(0.5) + 0.45 * eye.normalized()).cwiseMax(0.0).cwiseMin(1.0);
  const Eigen::Vector3d got = img.pixel(16 * 33 + 16);
  EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 0.03) << got.transpose();
  // A corner ray misses the sphere.
  EXPECT_LT(img.pixel(0).maxCoeff(), 1e-3);
}

TEST(AnalyticScene, StaticSphereIsTimeInvariant) {
  const AnalyticScene s = AnalyticScene::make(SceneKind::StaticSphere);
  const Camera cam = Camera::from_fov(12, 12, 0.7, look_at({0, -4, 1}, {0, 0, 0}));
  EXPECT_EQ(render_analytic(s, cam, 0.0, 128), render_analytic(s, cam, 0.8, 128));
}

TEST(AnalyticScene, DoublingSamplesChangesLessThanOneLevel) {
  SyntheticConfig cfg;
  cfg.width = cfg.height = 24;
  for (SceneKind k : {SceneKind::OrbitingSphere, SceneKind::MergingSpheres}) {
    cfg.scene = k;
    const AnalyticScene s = AnalyticScene::make(k);
    const auto pose = synthetic_poses(cfg, 1, 0)[0];
    const Camera cam = Camera::from_fov(cfg.width, cfg.height, 0.7, pose);
    for (double t : {0.0, 0.37}) {
      const Image a = render_analytic(s, cam, t, 512), b = render_analytic(s, cam, t, 1024);
      double worst = 0;
      for (std::size_t i = 0; i < a.data.size(); ++i) worst = std::max(worst, std::abs(double(a.data[i]) - b.data[i]));
      EXPECT_LT(worst, 1.0 / 255.0) << to_string(k) << " t=" << t;
    }
  }
}

TEST(AnalyticScene, OrbitMovesOverTime) {
  const AnalyticScene s = AnalyticScene::make(SceneKind::OrbitingSphere);
  EXPECT_GT(s.density({0.45, 0, 0, 0.0}), 30.0);
  EXPECT_LT(s.density({0.45, 0, 0, 0.5}), 1e-3);
  EXPECT_GT(s.density({-0.45, 0, 0, 0.5}), 30.0);
}

TEST(AnalyticScene, SceneNamesRoundTrip) {
  for (SceneKind k : {SceneKind::OrbitingSphere, SceneKind::MergingSpheres, SceneKind::StaticSphere,
                      SceneKind::Unbounded, SceneKind::Empty}) {
    EXPECT_EQ(scene_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(scene_kind_from_string("teapot"), ConfigError);
}

TEST(GenSynthetic, DeterministicAndLoadable) {
  SyntheticConfig cfg;
  cfg.n_cameras = 3;
  cfg.n_times = 4;
  cfg.width = cfg.height = 12;
  cfg.gt_samples = 64;
  cfg.n_test_cameras = 2;
  cfg.n_test_times = 2;
  cfg.seed = 42;
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  gen_synthetic(cfg, a);
  cfg.threads = 3;
  gen_synthetic(cfg, b);
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path other = b / fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(other)) << other;
    std::ifstream x(e.path(), std::ios::binary), y(other, std::ios::binary);
    const std::string bx((std::istreambuf_iterator<char>(x)), {}), by((std::istreambuf_iterator<char>(y)), {});
    EXPECT_EQ(bx, by) << e.path();
  }
  const Dataset train = load_dataset(a, "train");
  ASSERT_EQ(train.frames.size(), 12u);
  EXPECT_EQ(train.frames[0].file_path, "./train/r_0000");
  EXPECT_DOUBLE_EQ(train.frames[1].time, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(train.frames[3].time, 1.0);
  EXPECT_TRUE(train.bounds.has_value());
  EXPECT_NEAR(train.camera_angle_x, 40.0 * std::numbers::pi / 180.0, 1e-12);
  const Dataset test = load_dataset(a, "test");
  EXPECT_EQ(test.frames.size(), 4u);
  // Held-out poses are not training poses.
  for (const auto& f : test.frames) EXPECT_FALSE(f.transform.isApprox(train.frames[0].transform));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(GenSynthetic, SeedChangesPoses) {
  SyntheticConfig a, b;
  b.seed = 1;
  EXPECT_FALSE(synthetic_poses(a, 3, 0)[0].isApprox(synthetic_poses(b, 3, 0)[0]));
  EXPECT_TRUE(synthetic_poses(a, 3, 0)[2].isApprox(synthetic_poses(a, 3, 0)[2]));
}

TEST(Png, RoundTripIsQuantized) {
  const fs::path dir = scratch("png");
  const Image img = random_image(7, 5, 9);
  write_png(dir / "a.png", img);
  const Image back = read_png(dir / "a.png");
  EXPECT_EQ(back, quantize8(img));
  EXPECT_EQ(quantize8(back), back);
  fs::remove_all(dir);
}

TEST(Png, AlphaCompositesOntoBlack) {
  const fs::path dir = scratch("rgba");
  write_rgba_png(dir / "a.png", 2, 1, {255, 128, 0, 0, 200, 100, 50, 255});
  const Image img = read_png(dir / "a.png");
  EXPECT_EQ(img.pixel(0), Eigen::Vector3d::Zero());
  EXPECT_NEAR(img.pixel(1)[0], 200.0 / 255.0, 1e-6);
  EXPECT_NEAR(img.pixel(1)[2], 50.0 / 255.0, 1e-6);
  fs::remove_all(dir);
}

TEST(Png, MissingAndCorruptFiles) {
  const fs::path dir = scratch("badpng");
  EXPECT_THROW(read_png(dir / "nope.png"), IoError);
  std::ofstream(dir / "junk.png") << "not a png at all";
  EXPECT_THROW(read_png(dir / "junk.png"), IoError);
  fs::remove_all(dir);
}

TEST(DatasetLoader, ManifestRoundTrip) {
  const fs::path dir = scratch("manifest");
  fs::create_directories(dir / "train");
  Eigen::Matrix4d pose = look_at({1, 2, 3}, {0, 0, 0});
  write_png(dir / "train" / "f0.png", random_image(6, 4, 1));
  write_png(dir / "train" / "f1.png", random_image(6, 4, 2));
  AxisDomain bounds = AxisDomain::cube(1.5);
  write_manifest(dir / "transforms_train.json", 0.8, {{"./train/f0", 0.25, pose}, {"train/f1.png", 1.0, Eigen::Matrix4d::Identity()}},
                 bounds);
  const Dataset ds = load_dataset(dir, "train");
  ASSERT_EQ(ds.frames.size(), 2u);
  EXPECT_DOUBLE_EQ(ds.camera_angle_x, 0.8);
  EXPECT_EQ(ds.bounds->space_min, bounds.space_min);
  EXPECT_EQ(ds.bounds->space_max, bounds.space_max);
  EXPECT_TRUE(ds.frames[0].transform.isApprox(pose, 1e-12));
  EXPECT_EQ(ds.frames[0].time, 0.25);
  EXPECT_EQ(ds.frames[1].image, quantize8(random_image(6, 4, 2)));
  EXPECT_NEAR(ds.frames[0].camera.fx, 6.0 / (2.0 * std::tan(0.4)), 1e-12);
  EXPECT_EQ(ds.pixel_count(), 48u);
  fs::remove_all(dir);
}

TEST(DatasetLoader, ErrorKinds) {
  const fs::path dir = scratch("bad");
  write_png(dir / "img.png", Image(2, 2));
  auto expect_kind = [&](const nlohmann::json& doc, DatasetError::Kind kind) {
    write_json(dir / "transforms_x.json", doc);
    try {
      load_dataset(dir, "x");
      ADD_FAILURE() << "no error for " << doc.dump();
    } catch (const DatasetError& e) {
      EXPECT_EQ(e.kind(), kind) << e.what();
    }
  };
  using K = DatasetError::Kind;
  auto frame = [](nlohmann::json m, double t, std::string path = "img") {
    return nlohmann::json{{"file_path", path}, {"time", t}, {"transform_matrix", m}};
  };
  const nlohmann::json three_by_four = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};
  expect_kind({{"camera_angle_x", 0.7}, {"frames", {frame(three_by_four, 0.0)}}}, K::MalformedMatrix);
  const nlohmann::json singular = {{1, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  expect_kind({{"camera_angle_x", 0.7}, {"frames", {frame(singular, 0.0)}}}, K::MalformedMatrix);
  expect_kind({{"camera_angle_x", 0.7}, {"frames", {frame(identity_matrix(), 1.5)}}}, K::TimeOutOfRange);
  expect_kind({{"camera_angle_x", 0.7}, {"frames", {frame(identity_matrix(), -0.1)}}}, K::TimeOutOfRange);
  expect_kind({{"camera_angle_x", 0.7}, {"frames", {frame(identity_matrix(), 0.0, "gone")}}}, K::MissingFile);
  expect_kind({{"frames", {frame(identity_matrix(), 0.0)}}}, K::MalformedManifest);
  expect_kind({{"camera_angle_x", 0.7}, {"frames", nlohmann::json::array()}}, K::MalformedManifest);
  std::ofstream(dir / "transforms_y.json") << "{ not json";
  EXPECT_THROW(load_dataset(dir, "y"), DatasetError);
  try {
    load_dataset(dir, "nosuchsplit");
    ADD_FAILURE();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.kind(), K::MissingFile);
  }
  // A DatasetError is an IoError.
  EXPECT_THROW(load_dataset(dir, "nosuchsplit"), IoError);
  fs::remove_all(dir);
}
