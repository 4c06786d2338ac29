#include "hexplane/factorizations.hpp"

#include <algorithm>
#include <cmath>

namespace hexplane {

namespace {

std::vector<double>& scratch(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

void check_growth(const GridResolution& from, const GridResolution& to) {
  for (Axis a : {Axis::X, Axis::Y, Axis::Z, Axis::T}) {
    if (to.along(a) < from.along(a)) {
      throw ConfigError(std::string("upsampling cannot shrink axis ") + axis_label(a));
    }
  }
}

void validate_basis(const FeatureBasis& b, int rows) {
  if (b.rows != rows || b.data.size() != static_cast<std::size_t>(b.rows) * b.cols) {
    throw ConfigError("feature matrix shape does not match the component count");
  }
  for (float v : b.data) {
    if (!std::isfinite(v)) throw ConfigError("non-finite feature matrix entry");
  }
}

VMGroup make_vm_group(const std::array<Axis, 3>& axes, const GridResolution& res, int rank,
                      std::mt19937_64* rng, float scale) {
  VMGroup g{FeaturePlane(axes[0], axes[1], res.along(axes[0]), res.along(axes[1]), rank),
            FeatureLine(axes[2], res.along(axes[2]), rank)};
  if (rng) {
    fill_uniform(g.plane.data, *rng, scale);
    fill_uniform(g.line.data, *rng, scale);
  }
  return g;
}

void validate_vm_group(const VMGroup& g, const std::array<Axis, 3>& axes, const GridResolution& res) {
  g.plane.validate();
  g.line.validate();
  if (g.plane.axis_a != axes[0] || g.plane.axis_b != axes[1] || g.line.axis != axes[2]) {
    throw ConfigError("VM group axes do not follow the XY*Z, XZ*Y, ZY*X assignment");
  }
  if (g.plane.channels != g.line.channels) throw ConfigError("VM group plane/line ranks differ");
  if (g.plane.res_a != res.along(axes[0]) || g.plane.res_b != res.along(axes[1]) ||
      g.line.res != res.along(axes[2])) {
    throw ConfigError("VM group resolution disagrees with the field resolution");
  }
}

ParamView grid_view(const std::string& name, FeaturePlane& p) {
  return ParamView{name, {p.res_a, p.res_b, p.channels}, {p.axis_a, p.axis_b}, p.data, ParamGroup::Grid};
}

ParamView grid_view(const std::string& name, FeatureLine& l) {
  return ParamView{name, {l.res, l.channels}, {l.axis}, l.data, ParamGroup::Grid};
}

ParamView dense_view(const std::string& name, FeatureBasis& b) {
  return ParamView{name, {b.rows, b.cols}, {}, b.data, ParamGroup::Dense};
}

std::string plane_tag(const FeaturePlane& p) {
  return std::string{axis_label(p.axis_a), axis_label(p.axis_b)};
}

}  // namespace

std::array<std::array<Axis, 3>, 3> vm_group_axes() {
  return {{{Axis::X, Axis::Y, Axis::Z}, {Axis::X, Axis::Z, Axis::Y}, {Axis::Z, Axis::Y, Axis::X}}};
}

// ---------------------------------------------------------------------------
// VM-T

VMTField::VMTField(const VMTConfig& config, std::mt19937_64& rng)
    : domain_(config.domain), resolution_(config.resolution) {
  const auto axes = vm_group_axes();
  int rows = 0;
  for (int g = 0; g < 3; ++g) {
    groups_[g] = make_vm_group(axes[g], resolution_, config.ranks[g], &rng, config.init_scale);
    time_lines_[g] = TimeLine(Axis::T, resolution_.t, config.ranks[g]);
    fill_uniform(time_lines_[g].data, rng, config.init_scale);
    rows += config.ranks[g];
  }
  features_ = FeatureBasis(rows, config.feature_dim);
  fill_uniform(features_.data, rng, config.init_scale);
  validate();
}

VMTField::VMTField(std::array<VMGroup, 3> groups, std::array<TimeLine, 3> time_lines,
                   FeatureBasis features, AxisDomain domain, GridResolution resolution)
    : groups_(std::move(groups)), time_lines_(std::move(time_lines)), features_(std::move(features)),
      domain_(domain), resolution_(resolution) {
  validate();
}

void VMTField::validate() const {
  domain_.validate();
  const auto axes = vm_group_axes();
  int rows = 0;
  for (int g = 0; g < 3; ++g) {
    validate_vm_group(groups_[g], axes[g], resolution_);
    time_lines_[g].validate();
    if (time_lines_[g].axis != Axis::T || time_lines_[g].res != resolution_.t ||
        time_lines_[g].channels != groups_[g].plane.channels) {
      throw ConfigError("VM-T time line shape mismatch");
    }
    rows += groups_[g].plane.channels;
  }
  validate_basis(features_, rows);
}

void VMTField::query_normalized(const Point4& u, std::span<double> out) const {
  int max_rank = 0;
  for (const auto& g : groups_) max_rank = std::max(max_rank, g.plane.channels);
  std::vector<double>& buf = scratch(3 * static_cast<std::size_t>(max_rank));
  double* m = buf.data();
  double* l = m + max_rank;
  double* w = l + max_rank;
  const int cols = features_.cols;
  std::fill(out.begin(), out.begin() + cols, 0.0);
  int row = 0;
  for (int gi = 0; gi < 3; ++gi) {
    const auto& g = groups_[gi];
    const int rank = g.plane.channels;
    const auto n = static_cast<std::size_t>(rank);
    bilinear_sample(g.plane, coord(u, g.plane.axis_a), coord(u, g.plane.axis_b), {m, n});
    linear_sample(g.line, coord(u, g.line.axis), {l, n});
    eval_timeline(time_lines_[gi], u[3], {w, n});
    for (int r = 0; r < rank; ++r) {
      const double comp = m[r] * l[r] * w[r];
      const float* frow = features_.data.data() + static_cast<std::size_t>(row + r) * cols;
      for (int f = 0; f < cols; ++f) out[f] += comp * frow[f];
    }
    row += rank;
  }
}

void VMTField::backward_normalized(const Point4& u, std::span<const double> upstream,
                                   GradSlabs grads) const {
  int max_rank = 0;
  for (const auto& g : groups_) max_rank = std::max(max_rank, g.plane.channels);
  const auto mr = static_cast<std::size_t>(max_rank);
  std::vector<double>& buf = scratch(6 * mr);
  double* m = buf.data();
  double* l = m + mr;
  double* w = l + mr;
  double* dm = w + mr;
  double* dl = dm + mr;
  double* dw = dl + mr;
  const int cols = features_.cols;
  std::span<float> g_feat = grads[9];
  int row = 0;
  for (int gi = 0; gi < 3; ++gi) {
    const auto& g = groups_[gi];
    const int rank = g.plane.channels;
    const auto n = static_cast<std::size_t>(rank);
    bilinear_sample(g.plane, coord(u, g.plane.axis_a), coord(u, g.plane.axis_b), {m, n});
    linear_sample(g.line, coord(u, g.line.axis), {l, n});
    eval_timeline(time_lines_[gi], u[3], {w, n});
    for (int r = 0; r < rank; ++r) {
      const double comp = m[r] * l[r] * w[r];
      const std::size_t base = static_cast<std::size_t>(row + r) * cols;
      double dcomp = 0.0;
      for (int f = 0; f < cols; ++f) {
        dcomp += features_.data[base + f] * upstream[f];
        g_feat[base + f] += static_cast<float>(comp * upstream[f]);
      }
      dm[r] = dcomp * l[r] * w[r];
      dl[r] = dcomp * m[r] * w[r];
      dw[r] = dcomp * m[r] * l[r];
    }
    bilinear_scatter(g.plane, coord(u, g.plane.axis_a), coord(u, g.plane.axis_b), {dm, n}, grads[3 * gi]);
    linear_scatter(g.line, coord(u, g.line.axis), {dl, n}, grads[3 * gi + 1]);
    linear_scatter(time_lines_[gi], u[3], {dw, n}, grads[3 * gi + 2]);
    row += rank;
  }
}

std::vector<ParamView> VMTField::parameters() {
  std::vector<ParamView> views;
  for (int gi = 0; gi < 3; ++gi) {
    auto& g = groups_[gi];
    views.push_back(grid_view("plane." + plane_tag(g.plane), g.plane));
    views.push_back(grid_view(std::string("line.") + axis_label(g.line.axis), g.line));
    views.push_back(grid_view("time." + std::to_string(gi + 1), time_lines_[gi]));
  }
  views.push_back(dense_view("features", features_));
  return views;
}

ParamCount VMTField::param_count() const {
  ParamCount c;
  for (int gi = 0; gi < 3; ++gi) {
    c.plane_params += groups_[gi].plane.data.size() + groups_[gi].line.data.size() + time_lines_[gi].data.size();
  }
  c.basis_params = features_.data.size();
  return c;
}

void VMTField::upsample(const GridResolution& res) {
  check_growth(resolution_, res);
  for (int gi = 0; gi < 3; ++gi) {
    auto& g = groups_[gi];
    g.plane = resample(g.plane, res.along(g.plane.axis_a), res.along(g.plane.axis_b));
    g.line = resample(g.line, res.along(g.line.axis));
    time_lines_[gi] = resample(time_lines_[gi], res.t);
  }
  resolution_ = res;
}

std::unique_ptr<Field> VMTField::clone() const { return std::make_unique<VMTField>(*this); }

// ---------------------------------------------------------------------------
// CP

CPField::CPField(const CPConfig& config, std::mt19937_64& rng) : domain_(config.domain) {
  for (int a = 0; a < 4; ++a) {
    const auto axis = static_cast<Axis>(a);
    lines_[a] = FeatureLine(axis, config.resolution.along(axis), config.rank);
    fill_uniform(lines_[a].data, rng, config.init_scale);
  }
  features_ = FeatureBasis(config.rank, config.feature_dim);
  fill_uniform(features_.data, rng, config.init_scale);
  validate();
}

CPField::CPField(std::array<FeatureLine, 4> lines, FeatureBasis features, AxisDomain domain)
    : lines_(std::move(lines)), features_(std::move(features)), domain_(domain) {
  validate();
}

void CPField::validate() const {
  domain_.validate();
  for (int a = 0; a < 4; ++a) {
    lines_[a].validate();
    if (lines_[a].axis != static_cast<Axis>(a)) throw ConfigError("CP lines must be ordered X, Y, Z, T");
    if (lines_[a].channels != lines_[0].channels) throw ConfigError("CP lines must share one rank");
  }
  validate_basis(features_, lines_[0].channels);
}

GridResolution CPField::resolution() const {
  return {lines_[0].res, lines_[1].res, lines_[2].res, lines_[3].res};
}

void CPField::query_normalized(const Point4& u, std::span<double> out) const {
  const int rank = lines_[0].channels;
  const auto n = static_cast<std::size_t>(rank);
  std::vector<double>& buf = scratch(4 * n);
  for (int a = 0; a < 4; ++a) linear_sample(lines_[a], u[a], {buf.data() + a * n, n});
  const int cols = features_.cols;
  std::fill(out.begin(), out.begin() + cols, 0.0);
  for (int r = 0; r < rank; ++r) {
    const double comp = buf[r] * buf[n + r] * buf[2 * n + r] * buf[3 * n + r];
    const float* frow = features_.data.data() + static_cast<std::size_t>(r) * cols;
    for (int f = 0; f < cols; ++f) out[f] += comp * frow[f];
  }
}

void CPField::backward_normalized(const Point4& u, std::span<const double> upstream,
                                  GradSlabs grads) const {
  const int rank = lines_[0].channels;
  const auto n = static_cast<std::size_t>(rank);
  std::vector<double>& buf = scratch(8 * n);
  double* s = buf.data();
  double* ds = s + 4 * n;
  for (int a = 0; a < 4; ++a) linear_sample(lines_[a], u[a], {s + a * n, n});
  const int cols = features_.cols;
  std::span<float> g_feat = grads[4];
  for (int r = 0; r < rank; ++r) {
    const double x = s[r], y = s[n + r], z = s[2 * n + r], t = s[3 * n + r];
    const double comp = x * y * z * t;
    const std::size_t base = static_cast<std::size_t>(r) * cols;
    double dcomp = 0.0;
    for (int f = 0; f < cols; ++f) {
      dcomp += features_.data[base + f] * upstream[f];
      g_feat[base + f] += static_cast<float>(comp * upstream[f]);
    }
    ds[r] = dcomp * y * z * t;
    ds[n + r] = dcomp * x * z * t;
    ds[2 * n + r] = dcomp * x * y * t;
    ds[3 * n + r] = dcomp * x * y * z;
  }
  for (int a = 0; a < 4; ++a) linear_scatter(lines_[a], u[a], {ds + a * n, n}, grads[a]);
}

std::vector<ParamView> CPField::parameters() {
  std::vector<ParamView> views;
  for (auto& l : lines_) views.push_back(grid_view(std::string("line.") + axis_label(l.axis), l));
  views.push_back(dense_view("features", features_));
  return views;
}

ParamCount CPField::param_count() const {
  ParamCount c;
  for (const auto& l : lines_) c.plane_params += l.data.size();
  c.basis_params = features_.data.size();
  return c;
}

void CPField::upsample(const GridResolution& res) {
  check_growth(resolution(), res);
  for (int a = 0; a < 4; ++a) lines_[a] = resample(lines_[a], res.along(static_cast<Axis>(a)));
}

std::unique_ptr<Field> CPField::clone() const { return std::make_unique<CPField>(*this); }

// ---------------------------------------------------------------------------
// Volume basis

namespace {

std::array<std::array<Axis, 3>, 3> static_volume_axes() {
  // XY*Z, XZ*Y, YZ*X.
  return {{{Axis::X, Axis::Y, Axis::Z}, {Axis::X, Axis::Z, Axis::Y}, {Axis::Y, Axis::Z, Axis::X}}};
}

}  // namespace

void query_static_volume(const StaticVolume& volume, const Point4& u, std::span<double> out) {
  int max_rank = 0;
  for (const auto& g : volume.groups) max_rank = std::max(max_rank, g.plane.channels);
  std::vector<double>& buf = scratch(2 * static_cast<std::size_t>(max_rank));
  double* m = buf.data();
  double* l = m + max_rank;
  const int cols = volume.features.cols;
  std::fill(out.begin(), out.begin() + cols, 0.0);
  int row = 0;
  for (const auto& g : volume.groups) {
    const int rank = g.plane.channels;
    const auto n = static_cast<std::size_t>(rank);
    bilinear_sample(g.plane, coord(u, g.plane.axis_a), coord(u, g.plane.axis_b), {m, n});
    linear_sample(g.line, coord(u, g.line.axis), {l, n});
    for (int r = 0; r < rank; ++r) {
      const double comp = m[r] * l[r];
      const float* frow = volume.features.data.data() + static_cast<std::size_t>(row + r) * cols;
      for (int f = 0; f < cols; ++f) out[f] += comp * frow[f];
    }
    row += rank;
  }
}

VolumeBasisField::VolumeBasisField(const VolumeBasisConfig& config, std::mt19937_64& rng)
    : domain_(config.domain), resolution_(config.resolution) {
  if (config.basis_count < 1) throw ConfigError("volume basis needs at least one shared volume");
  const auto axes = static_volume_axes();
  const int rows = config.ranks[0] + config.ranks[1] + config.ranks[2];
  for (int i = 0; i < config.basis_count; ++i) {
    StaticVolume v;
    for (int g = 0; g < 3; ++g) {
      v.groups[g] = make_vm_group(axes[g], resolution_, config.ranks[g], &rng, config.init_scale);
    }
    v.features = FeatureBasis(rows, config.feature_dim);
    fill_uniform(v.features.data, rng, config.init_scale);
    volumes_.push_back(std::move(v));
  }
  weights_ = TimeLine(Axis::T, resolution_.t, config.basis_count);
  fill_uniform(weights_.data, rng, config.init_scale);
  validate();
}

VolumeBasisField::VolumeBasisField(std::vector<StaticVolume> volumes, TimeLine weights,
                                   AxisDomain domain, GridResolution resolution)
    : volumes_(std::move(volumes)), weights_(std::move(weights)), domain_(domain),
      resolution_(resolution) {
  validate();
}

void VolumeBasisField::validate() const {
  domain_.validate();
  if (volumes_.empty()) throw ConfigError("volume basis needs at least one shared volume");
  const auto axes = static_volume_axes();
  for (const auto& v : volumes_) {
    int rows = 0;
    for (int g = 0; g < 3; ++g) {
      validate_vm_group(v.groups[g], axes[g], resolution_);
      if (v.groups[g].plane.channels != volumes_.front().groups[g].plane.channels) {
        throw ConfigError("shared volumes must have identical ranks");
      }
      rows += v.groups[g].plane.channels;
    }
    validate_basis(v.features, rows);
    if (v.features.cols != volumes_.front().features.cols) {
      throw ConfigError("shared volumes must have identical feature sizes");
    }
  }
  weights_.validate();
  if (weights_.axis != Axis::T || weights_.res != resolution_.t ||
      weights_.channels != static_cast<int>(volumes_.size())) {
    throw ConfigError("volume weight line must have one channel per shared volume");
  }
}

void VolumeBasisField::query_normalized(const Point4& u, std::span<double> out) const {
  const int cols = feature_dim();
  const std::size_t nv = volumes_.size();
  std::vector<double> w(nv);
  eval_timeline(weights_, u[3], w);
  std::vector<double> vol(static_cast<std::size_t>(cols));
  std::fill(out.begin(), out.begin() + cols, 0.0);
  for (std::size_t i = 0; i < nv; ++i) {
    query_static_volume(volumes_[i], u, vol);
    for (int f = 0; f < cols; ++f) out[f] += w[i] * vol[f];
  }
}

void VolumeBasisField::backward_normalized(const Point4& u, std::span<const double> upstream,
                                           GradSlabs grads) const {
  const int cols = feature_dim();
  const std::size_t nv = volumes_.size();
  std::vector<double> w(nv);
  std::vector<double> dw(nv, 0.0);
  eval_timeline(weights_, u[3], w);
  int max_rank = 0;
  for (const auto& g : volumes_.front().groups) max_rank = std::max(max_rank, g.plane.channels);
  const auto mr = static_cast<std::size_t>(max_rank);
  std::vector<double> m(mr), l(mr), dm(mr), dl(mr);
  for (std::size_t i = 0; i < nv; ++i) {
    const StaticVolume& v = volumes_[i];
    const std::size_t slab0 = i * 7;
    std::span<float> g_feat = grads[slab0 + 6];
    int row = 0;
    double dwi = 0.0;
    for (int gi = 0; gi < 3; ++gi) {
      const auto& g = v.groups[gi];
      const int rank = g.plane.channels;
      const auto n = static_cast<std::size_t>(rank);
      bilinear_sample(g.plane, coord(u, g.plane.axis_a), coord(u, g.plane.axis_b), {m.data(), n});
      linear_sample(g.line, coord(u, g.line.axis), {l.data(), n});
      for (int r = 0; r < rank; ++r) {
        const double comp = m[r] * l[r];
        const std::size_t base = static_cast<std::size_t>(row + r) * cols;
        double dot = 0.0;
        for (int f = 0; f < cols; ++f) {
          dot += v.features.data[base + f] * upstream[f];
          g_feat[base + f] += static_cast<float>(w[i] * comp * upstream[f]);
        }
        dwi += comp * dot;
        const double dcomp = w[i] * dot;
        dm[r] = dcomp * l[r];
        dl[r] = dcomp * m[r];
      }
      bilinear_scatter(g.plane, coord(u, g.plane.axis_a), coord(u, g.plane.axis_b), {dm.data(), n},
                       grads[slab0 + 2 * gi]);
      linear_scatter(g.line, coord(u, g.line.axis), {dl.data(), n}, grads[slab0 + 2 * gi + 1]);
      row += rank;
    }
    dw[i] = dwi;
  }
  linear_scatter(weights_, u[3], dw, grads[nv * 7]);
}

std::vector<ParamView> VolumeBasisField::parameters() {
  std::vector<ParamView> views;
  for (std::size_t i = 0; i < volumes_.size(); ++i) {
    auto& v = volumes_[i];
    const std::string prefix = "volume" + std::to_string(i) + ".";
    for (auto& g : v.groups) {
      views.push_back(grid_view(prefix + "plane." + plane_tag(g.plane), g.plane));
      views.push_back(grid_view(prefix + "line." + std::string(1, axis_label(g.line.axis)), g.line));
    }
    views.push_back(dense_view(prefix + "features", v.features));
  }
  views.push_back(grid_view("time.weights", weights_));
  return views;
}

ParamCount VolumeBasisField::param_count() const {
  ParamCount c;
  for (const auto& v : volumes_) {
    for (const auto& g : v.groups) c.plane_params += g.plane.data.size() + g.line.data.size();
    c.basis_params += v.features.data.size();
  }
  c.plane_params += weights_.data.size();
  return c;
}

void VolumeBasisField::upsample(const GridResolution& res) {
  check_growth(resolution_, res);
  for (auto& v : volumes_) {
    for (auto& g : v.groups) {
      g.plane = resample(g.plane, res.along(g.plane.axis_a), res.along(g.plane.axis_b));
      g.line = resample(g.line, res.along(g.line.axis));
    }
  }
  weights_ = resample(weights_, res.t);
  resolution_ = res;
}

std::unique_ptr<Field> VolumeBasisField::clone() const {
  return std::make_unique<VolumeBasisField>(*this);
}

// ---------------------------------------------------------------------------

HexPlaneField embed_cp_in_hexplane(const CPField& cp) {
  const GridResolution res = cp.resolution();
  const int rank = cp.rank();
  const auto& lines = cp.lines();
  std::vector<HexPlaneField::Group> groups;
  const auto axes = layout_axes(PlaneLayout::Full);
  for (std::size_t g = 0; g < axes.size(); ++g) {
    HexPlaneField::Group group;
    const int channels = g == 0 ? rank : 1;
    for (const auto& ab : axes[g]) {
      FeaturePlane p(ab[0], ab[1], res.along(ab[0]), res.along(ab[1]), channels);
      if (g == 0) {
        const auto& la = lines[static_cast<int>(ab[0])];
        const auto& lb = lines[static_cast<int>(ab[1])];
        for (int i = 0; i < p.res_a; ++i) {
          for (int j = 0; j < p.res_b; ++j) {
            for (int r = 0; r < rank; ++r) p.at(i, j, r) = la.at(i, r) * lb.at(j, r);
          }
        }
      }
      group.planes.push_back(std::move(p));
    }
    groups.push_back(std::move(group));
  }
  FeatureBasis basis(rank + 2, cp.feature_dim());
  for (int r = 0; r < rank; ++r) {
    for (int f = 0; f < basis.cols; ++f) basis.at(r, f) = cp.features().at(r, f);
  }
  return HexPlaneField(std::move(groups), std::move(basis), cp.domain(), FusionScheme{},
                       PlaneLayout::Full, res);
}

}  // namespace hexplane
