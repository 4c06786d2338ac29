#include "hexplane/field.hpp"

namespace hexplane {

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::HexPlane: return "hexplane";
    case FieldKind::VMT: return "vmt";
    case FieldKind::CP: return "cp";
    case FieldKind::VolumeBasis: return "volume_basis";
  }
  return "?";
}

FieldKind field_kind_from_string(const std::string& name) {
  for (auto k : {FieldKind::HexPlane, FieldKind::VMT, FieldKind::CP, FieldKind::VolumeBasis}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown field kind '" + name + "'");
}

std::vector<double> Field::query(const Point4& p) const {
  std::vector<double> out(static_cast<std::size_t>(feature_dim()));
  query(p, out);
  return out;
}

void Field::query(const Point4& p, std::span<double> out) const {
  query_normalized(normalize_point(domain(), p), out);
}

void Field::backward(const Point4& p, std::span<const double> upstream, GradSlabs grads) const {
  backward_normalized(normalize_point(domain(), p), upstream, grads);
}

std::vector<std::vector<double>> Field::query_batch(std::span<const Point4> points) const {
  // Validate everything first so the first bad point is the one reported.
  std::vector<Point4> normalized;
  normalized.reserve(points.size());
  for (const auto& p : points) normalized.push_back(normalize_point(domain(), p));
  const auto f = static_cast<std::size_t>(feature_dim());
  std::vector<std::vector<double>> out(points.size(), std::vector<double>(f));
  for (std::size_t i = 0; i < normalized.size(); ++i) query_normalized(normalized[i], out[i]);
  return out;
}

std::vector<std::size_t> Field::slab_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& v : const_cast<Field*>(this)->parameters()) sizes.push_back(v.values.size());
  return sizes;
}

std::uint64_t dense_volume_bytes(std::uint64_t n, std::uint64_t t, std::uint64_t f,
                                 std::uint64_t bytes_per_entry) {
  return n * n * n * t * f * bytes_per_entry;
}

}  // namespace hexplane
