#include "hexplane/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "hexplane/factorizations.hpp"
#include "hexplane/hexplane_field.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint code assumes a little-endian host");

namespace hexplane {

namespace {

constexpr char kFieldMagic[4] = {'H', 'E', 'X', 'F'};
constexpr char kSlabMagic[4] = {'H', 'E', 'X', 'S'};
constexpr std::uint32_t kMaxDim = 1u << 20;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  template <typename T>
  void pod(const T& v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void u8(std::uint8_t v) { pod(v); }
  void u32(std::uint32_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void floats(const std::vector<float>& v) {
    os_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  }
  void bytes(const char* p, std::size_t n) { os_.write(p, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  template <typename T>
  T pod() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is_) throw IoError("truncated checkpoint");
    return v;
  }
  std::uint8_t u8() { return pod<std::uint8_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint32_t dim() {
    const std::uint32_t v = u32();
    if (v > kMaxDim) throw IoError("implausible dimension in checkpoint");
    return v;
  }
  double f64() { return pod<double>(); }
  void floats(std::vector<float>& v) {
    is_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (!is_) throw IoError("truncated checkpoint");
  }
  void bytes(char* p, std::size_t n) {
    is_.read(p, static_cast<std::streamsize>(n));
    if (!is_) throw IoError("truncated checkpoint");
  }

 private:
  std::istream& is_;
};

void write_plane(Writer& w, const FeaturePlane& p) {
  w.u8(static_cast<std::uint8_t>(axis_label(p.axis_a)));
  w.u8(static_cast<std::uint8_t>(axis_label(p.axis_b)));
  w.u32(static_cast<std::uint32_t>(p.res_a));
  w.u32(static_cast<std::uint32_t>(p.res_b));
  w.u32(static_cast<std::uint32_t>(p.channels));
  w.floats(p.data);
}

FeaturePlane read_plane(Reader& r) {
  const Axis a = axis_from_label(static_cast<char>(r.u8()));
  const Axis b = axis_from_label(static_cast<char>(r.u8()));
  const auto ra = static_cast<int>(r.dim());
  const auto rb = static_cast<int>(r.dim());
  const auto c = static_cast<int>(r.dim());
  FeaturePlane p(a, b, ra, rb, c);
  r.floats(p.data);
  return p;
}

void write_line(Writer& w, const FeatureLine& l) {
  w.u8(static_cast<std::uint8_t>(axis_label(l.axis)));
  w.u32(static_cast<std::uint32_t>(l.res));
  w.u32(static_cast<std::uint32_t>(l.channels));
  w.floats(l.data);
}

FeatureLine read_line(Reader& r) {
  const Axis a = axis_from_label(static_cast<char>(r.u8()));
  const auto res = static_cast<int>(r.dim());
  const auto c = static_cast<int>(r.dim());
  FeatureLine l(a, res, c);
  r.floats(l.data);
  return l;
}

void write_basis(Writer& w, const FeatureBasis& b) {
  w.u32(static_cast<std::uint32_t>(b.rows));
  w.u32(static_cast<std::uint32_t>(b.cols));
  w.floats(b.data);
}

FeatureBasis read_basis(Reader& r) {
  const auto rows = static_cast<int>(r.dim());
  const auto cols = static_cast<int>(r.dim());
  FeatureBasis b(rows, cols);
  r.floats(b.data);
  return b;
}

void write_domain(Writer& w, const AxisDomain& d) {
  for (int i = 0; i < 3; ++i) w.f64(d.space_min[i]);
  for (int i = 0; i < 3; ++i) w.f64(d.space_max[i]);
  w.f64(d.time_min);
  w.f64(d.time_max);
}

AxisDomain read_domain(Reader& r) {
  AxisDomain d;
  for (int i = 0; i < 3; ++i) d.space_min[i] = r.f64();
  for (int i = 0; i < 3; ++i) d.space_max[i] = r.f64();
  d.time_min = r.f64();
  d.time_max = r.f64();
  return d;
}

void write_resolution(Writer& w, const GridResolution& res) {
  w.u32(static_cast<std::uint32_t>(res.x));
  w.u32(static_cast<std::uint32_t>(res.y));
  w.u32(static_cast<std::uint32_t>(res.z));
  w.u32(static_cast<std::uint32_t>(res.t));
}

GridResolution read_resolution(Reader& r) {
  GridResolution res;
  res.x = static_cast<int>(r.dim());
  res.y = static_cast<int>(r.dim());
  res.z = static_cast<int>(r.dim());
  res.t = static_cast<int>(r.dim());
  return res;
}

FusionOp fusion_tag(std::uint8_t v) {
  if (v > 2) throw IoError("bad fusion tag in checkpoint");
  return static_cast<FusionOp>(v);
}

void write_vm_group(Writer& w, const VMGroup& g) {
  write_plane(w, g.plane);
  write_line(w, g.line);
}

VMGroup read_vm_group(Reader& r) {
  VMGroup g;
  g.plane = read_plane(r);
  g.line = read_line(r);
  return g;
}

void write_hexplane(Writer& w, const HexPlaneField& f) {
  w.u8(static_cast<std::uint8_t>(f.layout()));
  w.u32(static_cast<std::uint32_t>(f.plane_count()));
  for (const auto& g : f.groups()) {
    for (const auto& p : g.planes) write_plane(w, p);
  }
  write_basis(w, f.basis());
  write_domain(w, f.domain());
  w.u8(static_cast<std::uint8_t>(f.fusion().stage_one));
  w.u8(static_cast<std::uint8_t>(f.fusion().stage_two));
  write_resolution(w, f.resolution());
}

std::unique_ptr<Field> read_hexplane(Reader& r) {
  const std::uint8_t layout_tag = r.u8();
  if (layout_tag > static_cast<std::uint8_t>(PlaneLayout::Swap)) throw IoError("bad layout tag in checkpoint");
  const auto layout = static_cast<PlaneLayout>(layout_tag);
  const std::uint32_t count = r.u32();
  const auto axes = layout_axes(layout);
  std::size_t expected = 0;
  for (const auto& g : axes) expected += g.size();
  if (count != expected) throw IoError("plane count does not match the stored layout");
  std::vector<HexPlaneField::Group> groups;
  for (const auto& g : axes) {
    HexPlaneField::Group group;
    for (std::size_t k = 0; k < g.size(); ++k) {
      group.planes.push_back(read_plane(r));
      const auto& p = group.planes.back();
      if (p.axis_a != g[k][0] || p.axis_b != g[k][1]) throw IoError("plane axes do not match the stored layout");
    }
    groups.push_back(std::move(group));
  }
  FeatureBasis basis = read_basis(r);
  const AxisDomain domain = read_domain(r);
  FusionScheme fusion;
  fusion.stage_one = fusion_tag(r.u8());
  fusion.stage_two = fusion_tag(r.u8());
  const GridResolution res = read_resolution(r);
  return std::make_unique<HexPlaneField>(std::move(groups), std::move(basis), domain, fusion, layout, res);
}

void write_vmt(Writer& w, const VMTField& f) {
  for (int g = 0; g < 3; ++g) {
    write_vm_group(w, f.groups()[g]);
    write_line(w, f.time_lines()[g]);
  }
  write_basis(w, f.features());
  write_domain(w, f.domain());
  write_resolution(w, f.resolution());
}

std::unique_ptr<Field> read_vmt(Reader& r) {
  std::array<VMGroup, 3> groups;
  std::array<TimeLine, 3> times;
  for (int g = 0; g < 3; ++g) {
    groups[g] = read_vm_group(r);
    times[g] = read_line(r);
  }
  FeatureBasis features = read_basis(r);
  const AxisDomain domain = read_domain(r);
  const GridResolution res = read_resolution(r);
  return std::make_unique<VMTField>(std::move(groups), std::move(times), std::move(features), domain, res);
}

void write_cp(Writer& w, const CPField& f) {
  for (const auto& l : f.lines()) write_line(w, l);
  write_basis(w, f.features());
  write_domain(w, f.domain());
}

std::unique_ptr<Field> read_cp(Reader& r) {
  std::array<FeatureLine, 4> lines;
  for (auto& l : lines) l = read_line(r);
  FeatureBasis features = read_basis(r);
  const AxisDomain domain = read_domain(r);
  return std::make_unique<CPField>(std::move(lines), std::move(features), domain);
}

void write_volume_basis(Writer& w, const VolumeBasisField& f) {
  w.u32(static_cast<std::uint32_t>(f.volumes().size()));
  for (const auto& v : f.volumes()) {
    for (const auto& g : v.groups) write_vm_group(w, g);
    write_basis(w, v.features);
  }
  write_line(w, f.weights());
  write_domain(w, f.domain());
  write_resolution(w, f.resolution());
}

std::unique_ptr<Field> read_volume_basis(Reader& r) {
  const std::uint32_t n = r.dim();
  std::vector<StaticVolume> volumes(n);
  for (auto& v : volumes) {
    for (auto& g : v.groups) g = read_vm_group(r);
    v.features = read_basis(r);
  }
  TimeLine weights = read_line(r);
  const AxisDomain domain = read_domain(r);
  const GridResolution res = read_resolution(r);
  return std::make_unique<VolumeBasisField>(std::move(volumes), std::move(weights), domain, res);
}

}  // namespace

void write_field(std::ostream& os, const Field& field) {
  Writer w(os);
  w.bytes(kFieldMagic, 4);
  w.u32(kFieldFormatVersion);
  w.u8(static_cast<std::uint8_t>(field.kind()));
  switch (field.kind()) {
    case FieldKind::HexPlane: write_hexplane(w, dynamic_cast<const HexPlaneField&>(field)); break;
    case FieldKind::VMT: write_vmt(w, dynamic_cast<const VMTField&>(field)); break;
    case FieldKind::CP: write_cp(w, dynamic_cast<const CPField&>(field)); break;
    case FieldKind::VolumeBasis: write_volume_basis(w, dynamic_cast<const VolumeBasisField&>(field)); break;
  }
  if (!os) throw IoError("failed writing field checkpoint");
}

std::unique_ptr<Field> read_field(std::istream& is) {
  Reader r(is);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kFieldMagic, 4) != 0) throw IoError("not a field checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kFieldFormatVersion) {
    throw IoError("unsupported field checkpoint version " + std::to_string(version));
  }
  const std::uint8_t kind = r.u8();
  try {
    switch (static_cast<FieldKind>(kind)) {
      case FieldKind::HexPlane: return read_hexplane(r);
      case FieldKind::VMT: return read_vmt(r);
      case FieldKind::CP: return read_cp(r);
      case FieldKind::VolumeBasis: return read_volume_basis(r);
    }
  } catch (const ConfigError& e) {
    throw IoError(std::string("inconsistent field checkpoint: ") + e.what());
  }
  throw IoError("unknown field kind tag " + std::to_string(kind));
}

void save_field(const std::filesystem::path& path, const Field& field) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_field(os, field);
}

std::unique_ptr<Field> load_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_field(is);
}

void save_slabs(const std::filesystem::path& path, const std::vector<Slab>& slabs) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  Writer w(os);
  w.bytes(kSlabMagic, 4);
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(slabs.size()));
  for (const auto& s : slabs) {
    w.u32(static_cast<std::uint32_t>(s.name.size()));
    w.bytes(s.name.data(), s.name.size());
    w.u32(static_cast<std::uint32_t>(s.shape.size()));
    for (int d : s.shape) w.u32(static_cast<std::uint32_t>(d));
    w.u32(static_cast<std::uint32_t>(s.data.size()));
    w.floats(s.data);
  }
  if (!os) throw IoError("failed writing " + path.string());
}

std::vector<Slab> load_slabs(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  Reader r(is);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kSlabMagic, 4) != 0) throw IoError(path.string() + " is not a slab file");
  if (r.u32() != 1) throw IoError("unsupported slab file version");
  const std::uint32_t count = r.dim();
  std::vector<Slab> slabs(count);
  for (auto& s : slabs) {
    const std::uint32_t name_len = r.dim();
    s.name.resize(name_len);
    r.bytes(s.name.data(), name_len);
    const std::uint32_t rank = r.dim();
    std::size_t expected = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      s.shape.push_back(static_cast<int>(r.dim()));
      expected *= static_cast<std::size_t>(s.shape.back());
    }
    const std::uint32_t n = r.u32();
    if (n != expected) throw IoError("slab '" + s.name + "' size does not match its shape");
    s.data.resize(n);
    r.floats(s.data);
  }
  return slabs;
}

}  // namespace hexplane
