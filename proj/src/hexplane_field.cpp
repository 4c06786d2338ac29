#include "hexplane/hexplane_field.hpp"

#include <algorithm>
#include <cmath>

namespace hexplane {

std::string to_string(PlaneLayout layout) {
  switch (layout) {
    case PlaneLayout::Full: return "full";
    case PlaneLayout::SpatialOnly: return "spatial";
    case PlaneLayout::TemporalOnly: return "spatiotemporal";
    case PlaneLayout::Double: return "double";
    case PlaneLayout::Swap: return "swap";
  }
  return "?";
}

PlaneLayout plane_layout_from_string(const std::string& name) {
  for (auto l : {PlaneLayout::Full, PlaneLayout::SpatialOnly, PlaneLayout::TemporalOnly,
                 PlaneLayout::Double, PlaneLayout::Swap}) {
    if (to_string(l) == name) return l;
  }
  throw ConfigError("unknown plane layout '" + name + "'");
}

std::vector<std::vector<std::array<Axis, 2>>> layout_axes(PlaneLayout layout) {
  using A = Axis;
  switch (layout) {
    case PlaneLayout::Full:
      return {{{A::X, A::Y}, {A::Z, A::T}}, {{A::X, A::Z}, {A::Y, A::T}}, {{A::Y, A::Z}, {A::X, A::T}}};
    case PlaneLayout::SpatialOnly:
      return {{{A::X, A::Y}}, {{A::X, A::Z}}, {{A::Y, A::Z}}};
    case PlaneLayout::TemporalOnly:
      return {{{A::Z, A::T}}, {{A::Y, A::T}}, {{A::X, A::T}}};
    case PlaneLayout::Double:
      return {{{A::X, A::Y}, {A::Z, A::T}}};
    case PlaneLayout::Swap:
      return {{{A::X, A::Y}, {A::X, A::T}}, {{A::X, A::Z}, {A::Z, A::T}}, {{A::Y, A::Z}, {A::Y, A::T}}};
  }
  return {};
}

namespace {

constexpr std::size_t kMaxGroups = 8;

// Per-thread scratch so concurrent queries never share buffers.
std::vector<double>& scratch(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace

HexPlaneField::HexPlaneField(const HexPlaneConfig& config, std::mt19937_64& rng)
    : domain_(config.domain), fusion_(config.fusion), layout_(config.layout),
      resolution_(config.resolution) {
  const auto axes = layout_axes(config.layout);
  for (std::size_t g = 0; g < axes.size(); ++g) {
    Group group;
    for (const auto& ab : axes[g]) {
      group.planes.emplace_back(ab[0], ab[1], resolution_.along(ab[0]), resolution_.along(ab[1]),
                                config.ranks[g]);
      fill_uniform(group.planes.back().data, rng, config.init_scale);
      // a product over all groups of zero-mean planes starts near zero with no gradient
      if (fusion_.stage_two == FusionOp::Multiply)
        for (float& v : group.planes.back().data) v += 1.0f;
    }
    groups_.push_back(std::move(group));
  }
  const auto lengths = group_lengths();
  basis_ = FeatureBasis(fused_length(fusion_, lengths), config.feature_dim);
  fill_uniform(basis_.data, rng, config.init_scale);
  validate();
}

HexPlaneField::HexPlaneField(std::vector<Group> groups, FeatureBasis basis, AxisDomain domain,
                             FusionScheme fusion, PlaneLayout layout, GridResolution resolution)
    : groups_(std::move(groups)), basis_(std::move(basis)), domain_(domain), fusion_(fusion),
      layout_(layout), resolution_(resolution) {
  validate();
}

int HexPlaneField::plane_count() const {
  int n = 0;
  for (const auto& g : groups_) n += static_cast<int>(g.planes.size());
  return n;
}

std::vector<int> HexPlaneField::group_lengths() const {
  std::vector<int> lengths;
  for (const auto& g : groups_) {
    const int channels = g.planes.empty() ? 0 : g.planes.front().channels;
    lengths.push_back(group_output_length(fusion_.stage_one, static_cast<int>(g.planes.size()), channels));
  }
  return lengths;
}

void HexPlaneField::validate() const {
  domain_.validate();
  if (groups_.empty()) throw ConfigError("HexPlane field has no plane groups");
  if (groups_.size() > kMaxGroups) throw ConfigError("too many plane groups");
  for (const auto& g : groups_) {
    if (g.planes.empty()) throw ConfigError("empty plane group");
    for (const auto& p : g.planes) {
      p.validate();
      if (p.channels != g.planes.front().channels) {
        throw ConfigError("planes within a group must share a channel count");
      }
      if (p.res_a != resolution_.along(p.axis_a) || p.res_b != resolution_.along(p.axis_b)) {
        throw ConfigError("plane resolution disagrees with the field resolution on a shared axis");
      }
    }
  }
  const auto lengths = group_lengths();
  if (basis_.rows != fused_length(fusion_, lengths)) {
    throw ConfigError("basis rows do not match the fused vector length");
  }
  if (basis_.data.size() != static_cast<std::size_t>(basis_.rows) * basis_.cols) {
    throw ConfigError("basis storage does not match its shape");
  }
  for (float v : basis_.data) {
    if (!std::isfinite(v)) throw ConfigError("non-finite basis entry");
  }
}

void HexPlaneField::query_normalized(const Point4& u, std::span<double> out) const {
  // Scratch layout: [plane samples | group outputs | fused]
  std::size_t sample_len = 0;
  for (const auto& g : groups_) {
    for (const auto& p : g.planes) sample_len += static_cast<std::size_t>(p.channels);
  }
  int lengths[kMaxGroups];
  std::size_t group_len = 0;
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& g = groups_[gi];
    lengths[gi] = group_output_length(fusion_.stage_one, static_cast<int>(g.planes.size()), g.planes.front().channels);
    group_len += static_cast<std::size_t>(lengths[gi]);
  }
  const auto rows = static_cast<std::size_t>(basis_.rows);
  std::vector<double>& buf = scratch(sample_len + group_len + rows);
  double* samples = buf.data();
  double* group_out = samples + sample_len;
  double* fused = group_out + group_len;

  std::size_t s_off = 0;
  std::size_t g_off = 0;
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& g = groups_[gi];
    const int ch = g.planes.front().channels;
    double* first = samples + s_off;
    for (const auto& p : g.planes) {
      bilinear_sample(p, coord(u, p.axis_a), coord(u, p.axis_b), {samples + s_off, static_cast<std::size_t>(ch)});
      s_off += static_cast<std::size_t>(ch);
    }
    double* v = group_out + g_off;
    const std::size_t np = g.planes.size();
    switch (fusion_.stage_one) {
      case FusionOp::Multiply:
        for (int c = 0; c < ch; ++c) {
          double acc = first[c];
          for (std::size_t k = 1; k < np; ++k) acc *= first[k * ch + c];
          v[c] = acc;
        }
        break;
      case FusionOp::Sum:
        for (int c = 0; c < ch; ++c) {
          double acc = first[c];
          for (std::size_t k = 1; k < np; ++k) acc += first[k * ch + c];
          v[c] = acc;
        }
        break;
      case FusionOp::Concat:
        std::copy(first, first + np * ch, v);
        break;
    }
    g_off += static_cast<std::size_t>(lengths[gi]);
  }

  switch (fusion_.stage_two) {
    case FusionOp::Concat:
      std::copy(group_out, group_out + rows, fused);
      break;
    case FusionOp::Sum:
    case FusionOp::Multiply: {
      const bool mul = fusion_.stage_two == FusionOp::Multiply;
      std::copy(group_out, group_out + rows, fused);
      for (std::size_t gi = 1; gi < groups_.size(); ++gi) {
        const double* v = group_out + gi * rows;
        for (std::size_t r = 0; r < rows; ++r) fused[r] = mul ? fused[r] * v[r] : fused[r] + v[r];
      }
      break;
    }
  }

  const int cols = basis_.cols;
  std::fill(out.begin(), out.begin() + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double fr = fused[r];
    const float* brow = basis_.data.data() + r * cols;
    for (int f = 0; f < cols; ++f) out[f] += fr * brow[f];
  }
}

void HexPlaneField::backward_normalized(const Point4& u, std::span<const double> upstream,
                                        GradSlabs grads) const {
  std::size_t sample_len = 0;
  for (const auto& g : groups_) {
    for (const auto& p : g.planes) sample_len += static_cast<std::size_t>(p.channels);
  }
  int lengths[kMaxGroups];
  std::size_t group_len = 0;
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& g = groups_[gi];
    lengths[gi] = group_output_length(fusion_.stage_one, static_cast<int>(g.planes.size()), g.planes.front().channels);
    group_len += static_cast<std::size_t>(lengths[gi]);
  }
  const auto rows = static_cast<std::size_t>(basis_.rows);
  // [samples | group outputs | fused | d_fused | d_group | d_sample]
  std::vector<double>& buf = scratch(2 * (sample_len + group_len + rows));
  double* samples = buf.data();
  double* group_out = samples + sample_len;
  double* fused = group_out + group_len;
  double* d_fused = fused + rows;
  double* d_group = d_fused + rows;
  double* d_sample = d_group + group_len;

  // Forward recomputation.
  std::size_t s_off = 0;
  std::size_t g_off = 0;
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& g = groups_[gi];
    const int ch = g.planes.front().channels;
    const std::size_t np = g.planes.size();
    double* first = samples + s_off;
    for (const auto& p : g.planes) {
      bilinear_sample(p, coord(u, p.axis_a), coord(u, p.axis_b), {samples + s_off, static_cast<std::size_t>(ch)});
      s_off += static_cast<std::size_t>(ch);
    }
    double* v = group_out + g_off;
    for (int c = 0; c < ch; ++c) {
      if (fusion_.stage_one == FusionOp::Concat) break;
      double acc = first[c];
      for (std::size_t k = 1; k < np; ++k) {
        acc = fusion_.stage_one == FusionOp::Multiply ? acc * first[k * ch + c] : acc + first[k * ch + c];
      }
      v[c] = acc;
    }
    if (fusion_.stage_one == FusionOp::Concat) std::copy(first, first + np * ch, v);
    g_off += static_cast<std::size_t>(lengths[gi]);
  }
  if (fusion_.stage_two == FusionOp::Concat) {
    std::copy(group_out, group_out + rows, fused);
  } else {
    const bool mul = fusion_.stage_two == FusionOp::Multiply;
    std::copy(group_out, group_out + rows, fused);
    for (std::size_t gi = 1; gi < groups_.size(); ++gi) {
      const double* v = group_out + gi * rows;
      for (std::size_t r = 0; r < rows; ++r) fused[r] = mul ? fused[r] * v[r] : fused[r] + v[r];
    }
  }

  // Basis: out = fused^T B.
  const int cols = basis_.cols;
  std::span<float> g_basis = grads[static_cast<std::size_t>(plane_count())];
  for (std::size_t r = 0; r < rows; ++r) {
    const float* brow = basis_.data.data() + r * cols;
    float* grow = g_basis.data() + r * cols;
    double acc = 0.0;
    for (int f = 0; f < cols; ++f) {
      acc += brow[f] * upstream[f];
      grow[f] += static_cast<float>(fused[r] * upstream[f]);
    }
    d_fused[r] = acc;
  }

  // Stage two adjoint.
  if (fusion_.stage_two == FusionOp::Concat) {
    std::copy(d_fused, d_fused + rows, d_group);
  } else {
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      double* dv = d_group + gi * rows;
      for (std::size_t r = 0; r < rows; ++r) {
        double d = d_fused[r];
        if (fusion_.stage_two == FusionOp::Multiply) {
          for (std::size_t h = 0; h < groups_.size(); ++h) {
            if (h != gi) d *= group_out[h * rows + r];
          }
        }
        dv[r] = d;
      }
    }
  }

  // Stage one adjoint, then scatter into the planes.
  s_off = 0;
  g_off = 0;
  std::size_t plane_index = 0;
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& g = groups_[gi];
    const int ch = g.planes.front().channels;
    const std::size_t np = g.planes.size();
    const double* first = samples + s_off;
    const double* dv = d_group + g_off;
    double* ds = d_sample + s_off;
    for (std::size_t k = 0; k < np; ++k) {
      for (int c = 0; c < ch; ++c) {
        double d;
        switch (fusion_.stage_one) {
          case FusionOp::Multiply:
            d = dv[c];
            for (std::size_t q = 0; q < np; ++q) {
              if (q != k) d *= first[q * ch + c];
            }
            break;
          case FusionOp::Sum:
            d = dv[c];
            break;
          case FusionOp::Concat:
          default:
            d = dv[k * ch + c];
            break;
        }
        ds[k * ch + c] = d;
      }
    }
    for (std::size_t k = 0; k < np; ++k) {
      const auto& p = g.planes[k];
      bilinear_scatter(p, coord(u, p.axis_a), coord(u, p.axis_b),
                       {ds + k * ch, static_cast<std::size_t>(ch)}, grads[plane_index]);
      ++plane_index;
    }
    s_off += np * static_cast<std::size_t>(ch);
    g_off += static_cast<std::size_t>(lengths[gi]);
  }
}

std::vector<ParamView> HexPlaneField::parameters() {
  std::vector<ParamView> views;
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    for (auto& p : groups_[gi].planes) {
      ParamView v;
      v.name = std::string("plane.") + axis_label(p.axis_a) + axis_label(p.axis_b);
      v.shape = {p.res_a, p.res_b, p.channels};
      v.axes = {p.axis_a, p.axis_b};
      v.values = p.data;
      v.group = ParamGroup::Grid;
      views.push_back(std::move(v));
    }
  }
  ParamView b;
  b.name = "basis";
  b.shape = {basis_.rows, basis_.cols};
  b.values = basis_.data;
  b.group = ParamGroup::Dense;
  views.push_back(std::move(b));
  return views;
}

ParamCount HexPlaneField::param_count() const {
  ParamCount c;
  for (const auto& g : groups_) {
    for (const auto& p : g.planes) c.plane_params += p.data.size();
  }
  c.basis_params = basis_.data.size();
  return c;
}

void HexPlaneField::upsample(const GridResolution& res) {
  for (Axis a : {Axis::X, Axis::Y, Axis::Z, Axis::T}) {
    if (res.along(a) < resolution_.along(a)) {
      throw ConfigError(std::string("upsampling cannot shrink axis ") + axis_label(a));
    }
  }
  for (auto& g : groups_) {
    for (auto& p : g.planes) p = resample(p, res.along(p.axis_a), res.along(p.axis_b));
  }
  resolution_ = res;
}

std::unique_ptr<Field> HexPlaneField::clone() const { return std::make_unique<HexPlaneField>(*this); }

DenseGrid densify(const HexPlaneField& field, const GridResolution& res) {
  const FusionScheme fusion = field.fusion();
  if (fusion.stage_one != FusionOp::Multiply || fusion.stage_two != FusionOp::Concat) {
    throw ConfigError("dense reconstruction is only defined for multiply-concat fusion, not " +
                      to_string(fusion));
  }
  for (Axis a : {Axis::X, Axis::Y, Axis::Z, Axis::T}) {
    if (res.along(a) < 2) throw ConfigError("dense grid needs at least 2 nodes per axis");
  }
  DenseGrid grid;
  grid.res = res;
  grid.features = field.feature_dim();
  grid.data.assign(static_cast<std::size_t>(res.x) * res.y * res.z * res.t * grid.features, 0.0);

  const FeatureBasis& basis = field.basis();
  int row_offset = 0;
  for (const auto& g : field.groups()) {
    std::vector<FeaturePlane> planes;
    for (const auto& p : g.planes) planes.push_back(resample(p, res.along(p.axis_a), res.along(p.axis_b)));
    const int rank = planes.front().channels;
    std::array<int, 4> idx{};
    for (idx[0] = 0; idx[0] < res.x; ++idx[0]) {
      for (idx[1] = 0; idx[1] < res.y; ++idx[1]) {
        for (idx[2] = 0; idx[2] < res.z; ++idx[2]) {
          for (idx[3] = 0; idx[3] < res.t; ++idx[3]) {
            double* cell = grid.data.data() + grid.index(idx[0], idx[1], idx[2], idx[3]);
            for (int r = 0; r < rank; ++r) {
              double component = 1.0;
              for (const auto& p : planes) {
                component *= p.at(idx[static_cast<int>(p.axis_a)], idx[static_cast<int>(p.axis_b)], r);
              }
              for (int f = 0; f < grid.features; ++f) {
                cell[f] += component * basis.at(row_offset + r, f);
              }
            }
          }
        }
      }
    }
    row_offset += rank;
  }
  return grid;
}

HexPlaneField upsampled(const HexPlaneField& field, const GridResolution& res) {
  HexPlaneField copy = field;
  copy.upsample(res);
  return copy;
}

}  // namespace hexplane
