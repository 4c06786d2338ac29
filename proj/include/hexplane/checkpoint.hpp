#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hexplane/field.hpp"

namespace hexplane {

/// Current on-disk version of the field container.
inline constexpr std::uint32_t kFieldFormatVersion = 1;

/// Field container ("HEXF"). Layout, all little-endian:
///   magic "HEXF", u32 version, u8 field kind, then a kind-specific body.
/// HexPlane body: u8 layout, u32 plane count, per plane two axis labels,
/// u32 res_a/res_b/channels and f32 data; u32 basis rows/cols and f32 data;
/// f64 domain bounds (min xyz, max xyz, tmin, tmax); u8 stage-one/stage-two
/// tags; u32 resolution x/y/z/t.
void write_field(std::ostream& os, const Field& field);
std::unique_ptr<Field> read_field(std::istream& is);

void save_field(const std::filesystem::path& path, const Field& field);
std::unique_ptr<Field> load_field(const std::filesystem::path& path);

/// A named float array, used for decoder weights and optimizer moments.
struct Slab {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;

  bool operator==(const Slab&) const = default;
};

/// Slab file ("HEXS"): u32 version, u32 count, then per slab a u32-prefixed
/// name, u32 rank, u32 dims and f32 data.
void save_slabs(const std::filesystem::path& path, const std::vector<Slab>& slabs);
std::vector<Slab> load_slabs(const std::filesystem::path& path);

}  // namespace hexplane
