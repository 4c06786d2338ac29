#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace hexplane {

/// Axis labels of the 4D spacetime domain.
enum class Axis : std::uint8_t { X = 0, Y = 1, Z = 2, T = 3 };

char axis_label(Axis axis);
Axis axis_from_label(char label);

/// (x, y, z, t) in scene units, or in [0,1]^4 once normalized.
using Point4 = std::array<double, 4>;

inline double coord(const Point4& p, Axis a) { return p[static_cast<int>(a)]; }

// Error taxonomy. The CLI maps these onto exit codes.

class DomainError : public std::out_of_range {
 public:
  DomainError(Axis axis, double value);
  Axis axis() const noexcept { return axis_; }

 private:
  Axis axis_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned spacetime bounds. Time is normalized, normally [0, 1].
struct AxisDomain {
  Eigen::Vector3d space_min{-1.0, -1.0, -1.0};
  Eigen::Vector3d space_max{1.0, 1.0, 1.0};
  double time_min = 0.0;
  double time_max = 1.0;

  static AxisDomain cube(double half_extent);

  double lower(Axis a) const;
  double upper(Axis a) const;
  double extent(Axis a) const { return upper(a) - lower(a); }

  /// Throws ConfigError when any axis is empty or inverted.
  void validate() const;

  bool operator==(const AxisDomain&) const = default;
};

/// Maps a point in scene units to [0,1]^4. Bounds are closed; anything
/// outside raises DomainError naming the first offending axis.
Point4 normalize_point(const AxisDomain& domain, double x, double y, double z, double t);
Point4 normalize_point(const AxisDomain& domain, const Point4& p);

/// Renderer-side policy: pull a point back inside the closed bounds.
Point4 clamp_to_domain(const AxisDomain& domain, const Point4& p);

/// Grid node counts per axis (corner-aligned: node i sits at i/(n-1)).
struct GridResolution {
  int x = 2;
  int y = 2;
  int z = 2;
  int t = 2;

  int along(Axis a) const;
  bool operator==(const GridResolution&) const = default;
};

std::string to_string(const GridResolution& res);

}  // namespace hexplane
