#include "hexplane/dataset.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/LU>

#include "json.hpp"

namespace hexplane {

using nlohmann::json;

std::size_t Dataset::pixel_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.image.pixels();
  return n;
}

void write_manifest(const std::filesystem::path& path, double camera_angle_x,
                    const std::vector<ManifestFrame>& frames, const std::optional<AxisDomain>& bounds) {
  json doc;
  doc["camera_angle_x"] = camera_angle_x;
  if (bounds) {
    doc["scene_bounds"] = {{bounds->space_min.x(), bounds->space_min.y(), bounds->space_min.z()},
                           {bounds->space_max.x(), bounds->space_max.y(), bounds->space_max.z()}};
  }
  json list = json::array();
  for (const auto& f : frames) {
    json m = json::array();
    for (int r = 0; r < 4; ++r) m.push_back({f.transform(r, 0), f.transform(r, 1), f.transform(r, 2), f.transform(r, 3)});
    list.push_back({{"file_path", f.file_path}, {"time", f.time}, {"transform_matrix", m}});
  }
  doc["frames"] = list;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << doc.dump(2) << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

namespace {

using Kind = DatasetError::Kind;

Eigen::Matrix4d parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw DatasetError(Kind::MalformedMatrix, where + ": transform_matrix must be 4x4");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 4) {
      throw DatasetError(Kind::MalformedMatrix, where + ": transform_matrix must be 4x4");
    }
    for (int c = 0; c < 4; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw DatasetError(Kind::MalformedMatrix, where + ": non-numeric matrix entry");
      m(r, c) = v.get<double>();
    }
  }
  if (!m.allFinite() || std::abs(m.determinant()) < 1e-12) {
    throw DatasetError(Kind::MalformedMatrix, where + ": transform_matrix is not invertible");
  }
  if (m.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
    throw DatasetError(Kind::MalformedMatrix, where + ": transform_matrix bottom row must be 0 0 0 1");
  }
  return m;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& root, const std::string& split) {
  const std::filesystem::path manifest = root / ("transforms_" + split + ".json");
  std::ifstream is(manifest);
  if (!is) throw DatasetError(Kind::MissingFile, "missing manifest " + manifest.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw DatasetError(Kind::MalformedManifest, manifest.string() + ": " + e.what());
  }
  Dataset ds;
  try {
    ds.camera_angle_x = doc.at("camera_angle_x").get<double>();
    if (!(ds.camera_angle_x > 0.0) || !(ds.camera_angle_x < 3.14159)) {
      throw DatasetError(Kind::MalformedManifest, manifest.string() + ": camera_angle_x out of range");
    }
    if (doc.contains("scene_bounds")) {
      const auto& b = doc.at("scene_bounds");
      AxisDomain d;
      for (int i = 0; i < 3; ++i) {
        d.space_min[i] = b.at(0).at(static_cast<std::size_t>(i)).get<double>();
        d.space_max[i] = b.at(1).at(static_cast<std::size_t>(i)).get<double>();
      }
      d.validate();
      ds.bounds = d;
    }
    const json& frames = doc.at("frames");
    if (!frames.is_array()) throw DatasetError(Kind::MalformedManifest, manifest.string() + ": frames must be a list");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const json& fj = frames[i];
      const std::string where = manifest.string() + " frame " + std::to_string(i);
      Frame f;
      f.file_path = fj.at("file_path").get<std::string>();
      f.time = fj.contains("time") ? fj.at("time").get<double>() : 0.0;
      if (!(f.time >= 0.0 && f.time <= 1.0)) {
        throw DatasetError(Kind::TimeOutOfRange, where + ": time " + std::to_string(f.time) + " outside [0, 1]");
      }
      f.transform = parse_matrix(fj.at("transform_matrix"), where);
      std::filesystem::path image_path = root / f.file_path;
      if (!image_path.has_extension()) image_path += ".png";
      image_path = image_path.lexically_normal();
      if (!std::filesystem::exists(image_path)) {
        throw DatasetError(Kind::MissingFile, where + ": missing image " + image_path.string());
      }
      f.image = read_png(image_path);
      f.camera = Camera::from_fov(f.image.width, f.image.height, ds.camera_angle_x, f.transform);
      ds.frames.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw DatasetError(Kind::MalformedManifest, manifest.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DatasetError(Kind::MalformedManifest, manifest.string() + ": " + e.what());
  }
  if (ds.frames.empty()) throw DatasetError(Kind::MalformedManifest, manifest.string() + ": no frames");
  return ds;
}

}  // namespace hexplane
