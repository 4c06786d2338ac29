#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hexplane/camera.hpp"
#include "hexplane/image.hpp"

namespace hexplane {

class DatasetError : public IoError {
 public:
  enum class Kind { MissingFile, MalformedManifest, MalformedMatrix, TimeOutOfRange };

  DatasetError(Kind kind, const std::string& message) : IoError(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Frame {
  std::string file_path;  // as written in the manifest
  double time = 0.0;
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();
  Camera camera;
  Image image;
};

struct Dataset {
  double camera_angle_x = 0.0;
  /// Optional "scene_bounds" entry: [[xmin,ymin,zmin],[xmax,ymax,zmax]].
  std::optional<AxisDomain> bounds;
  std::vector<Frame> frames;

  std::size_t pixel_count() const;
};

/// Manifest entry without pixels, used by the writer.
struct ManifestFrame {
  std::string file_path;
  double time = 0.0;
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();
};

void write_manifest(const std::filesystem::path& path, double camera_angle_x,
                    const std::vector<ManifestFrame>& frames, const std::optional<AxisDomain>& bounds);

/// Reads transforms_<split>.json under `root` and every image it lists
/// (".png" is appended to paths without an extension). Intrinsics follow
/// fx = W / (2 tan(camera_angle_x / 2)).
Dataset load_dataset(const std::filesystem::path& root, const std::string& split);

}  // namespace hexplane
