#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace hexplane {

/// RGB image with linear values in [0, 1], row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.0f) {}

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  Eigen::Vector3d pixel(std::size_t i) const { return {data[3 * i], data[3 * i + 1], data[3 * i + 2]}; }
  void set_pixel(std::size_t i, const Eigen::Vector3d& c);
  bool operator==(const Image&) const = default;
};

/// Rounds to 8 bits and writes an RGB PNG.
void write_png(const std::filesystem::path& path, const Image& image);

/// Reads 8/16-bit gray, gray+alpha, RGB or RGBA PNGs. Alpha is composited
/// onto a black background (rgb * alpha).
Image read_png(const std::filesystem::path& path);

/// Values quantized to the 8-bit grid, as a PNG round trip would.
Image quantize8(const Image& image);

}  // namespace hexplane
