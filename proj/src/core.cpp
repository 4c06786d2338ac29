#include "hexplane/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hexplane {

char axis_label(Axis axis) {
  static constexpr char kLabels[] = {'X', 'Y', 'Z', 'T'};
  return kLabels[static_cast<int>(axis)];
}

Axis axis_from_label(char label) {
  switch (label) {
    case 'X': return Axis::X;
    case 'Y': return Axis::Y;
    case 'Z': return Axis::Z;
    case 'T': return Axis::T;
    default: throw ConfigError(std::string("unknown axis label '") + label + "'");
  }
}

namespace {

std::string domain_message(Axis axis, double value) {
  std::ostringstream os;
  os << "point outside domain on axis " << axis_label(axis) << " (value " << value << ")";
  return os.str();
}

}  // namespace

DomainError::DomainError(Axis axis, double value)
    : std::out_of_range(domain_message(axis, value)), axis_(axis) {}

AxisDomain AxisDomain::cube(double half_extent) {
  AxisDomain d;
  d.space_min = Eigen::Vector3d::Constant(-half_extent);
  d.space_max = Eigen::Vector3d::Constant(half_extent);
  return d;
}

double AxisDomain::lower(Axis a) const {
  return a == Axis::T ? time_min : space_min[static_cast<int>(a)];
}

double AxisDomain::upper(Axis a) const {
  return a == Axis::T ? time_max : space_max[static_cast<int>(a)];
}

void AxisDomain::validate() const {
  for (Axis a : {Axis::X, Axis::Y, Axis::Z, Axis::T}) {
    if (!(lower(a) < upper(a)) || !std::isfinite(lower(a)) || !std::isfinite(upper(a))) {
      throw ConfigError(std::string("empty or invalid domain bounds on axis ") + axis_label(a));
    }
  }
}

Point4 normalize_point(const AxisDomain& domain, double x, double y, double z, double t) {
  const Point4 p{x, y, z, t};
  Point4 u{};
  for (int i = 0; i < 4; ++i) {
    const auto a = static_cast<Axis>(i);
    const double lo = domain.lower(a);
    const double hi = domain.upper(a);
    // NaN fails both comparisons and lands here too.
    if (!(p[i] >= lo && p[i] <= hi)) throw DomainError(a, p[i]);
    if (p[i] == lo) {
      u[i] = 0.0;
    } else if (p[i] == hi) {
      u[i] = 1.0;
    } else {
      u[i] = std::clamp((p[i] - lo) / (hi - lo), 0.0, 1.0);
    }
  }
  return u;
}

Point4 normalize_point(const AxisDomain& domain, const Point4& p) {
  return normalize_point(domain, p[0], p[1], p[2], p[3]);
}

Point4 clamp_to_domain(const AxisDomain& domain, const Point4& p) {
  Point4 out{};
  for (int i = 0; i < 4; ++i) {
    const auto a = static_cast<Axis>(i);
    out[i] = std::clamp(p[i], domain.lower(a), domain.upper(a));
  }
  return out;
}

int GridResolution::along(Axis a) const {
  switch (a) {
    case Axis::X: return x;
    case Axis::Y: return y;
    case Axis::Z: return z;
    case Axis::T: return t;
  }
  return 0;
}

std::string to_string(const GridResolution& res) {
  std::ostringstream os;
  os << res.x << "x" << res.y << "x" << res.z << "x" << res.t;
  return os.str();
}

}  // namespace hexplane
