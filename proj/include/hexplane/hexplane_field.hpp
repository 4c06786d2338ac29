#pragma once

#include <array>
#include <random>
#include <vector>

#include "hexplane/feature_grid.hpp"
#include "hexplane/field.hpp"
#include "hexplane/fusion.hpp"

namespace hexplane {

/// Which planes a field carries and how they are grouped before fusion.
enum class PlaneLayout : std::uint8_t {
  Full = 0,          // (XY,ZT) (XZ,YT) (YZ,XT)
  SpatialOnly = 1,   // (XY) (XZ) (YZ)
  TemporalOnly = 2,  // (ZT) (YT) (XT)
  Double = 3,        // (XY,ZT)
  Swap = 4,          // (XY,XT) (XZ,ZT) (YZ,YT): pairs share an axis
};

std::string to_string(PlaneLayout layout);
PlaneLayout plane_layout_from_string(const std::string& name);

/// Axis pairs of each group for a layout, in canonical order.
std::vector<std::vector<std::array<Axis, 2>>> layout_axes(PlaneLayout layout);

/// Row-major rows x cols matrix mapping fused vectors to output features.
struct FeatureBasis {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  FeatureBasis() = default;
  FeatureBasis(int rows, int cols) : rows(rows), cols(cols), data(static_cast<std::size_t>(rows) * cols, 0.0f) {}

  float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct HexPlaneConfig {
  GridResolution resolution{32, 32, 32, 20};
  std::array<int, 3> ranks{8, 8, 8};
  int feature_dim = 27;
  FusionScheme fusion{};
  PlaneLayout layout = PlaneLayout::Full;
  AxisDomain domain{};
  float init_scale = 0.1f;
};

/// Six (or fewer, for ablation layouts) feature planes fused into an
/// F-dimensional feature by a shared basis matrix.
class HexPlaneField final : public Field {
 public:
  struct Group {
    std::vector<FeaturePlane> planes;
  };

  /// Random init: planes and basis uniform in [-init_scale, init_scale]; planes
  /// are centred on 1 instead when stage two multiplies.
  HexPlaneField(const HexPlaneConfig& config, std::mt19937_64& rng);

  /// Assembles a field from explicit parts; validates every invariant.
  HexPlaneField(std::vector<Group> groups, FeatureBasis basis, AxisDomain domain,
                FusionScheme fusion, PlaneLayout layout, GridResolution resolution);

  FieldKind kind() const override { return FieldKind::HexPlane; }
  const AxisDomain& domain() const override { return domain_; }
  int feature_dim() const override { return basis_.cols; }
  GridResolution resolution() const override { return resolution_; }

  void query_normalized(const Point4& u, std::span<double> out) const override;
  void backward_normalized(const Point4& u, std::span<const double> upstream,
                           GradSlabs grads) const override;

  std::vector<ParamView> parameters() override;
  ParamCount param_count() const override;
  void upsample(const GridResolution& res) override;
  std::unique_ptr<Field> clone() const override;

  const std::vector<Group>& groups() const { return groups_; }
  std::vector<Group>& groups() { return groups_; }
  const FeatureBasis& basis() const { return basis_; }
  FeatureBasis& basis() { return basis_; }
  FusionScheme fusion() const { return fusion_; }
  PlaneLayout layout() const { return layout_; }
  int plane_count() const;

  /// Per-group stage-one output lengths.
  std::vector<int> group_lengths() const;

  void validate() const;

 private:
  std::vector<Group> groups_;
  FeatureBasis basis_;
  AxisDomain domain_;
  FusionScheme fusion_;
  PlaneLayout layout_ = PlaneLayout::Full;
  GridResolution resolution_;
};

/// Materializes the field on a corner-aligned 4D grid as a sum of outer
/// products of the (resampled) planes. Only multiply+concat fusion has this form.
DenseGrid densify(const HexPlaneField& field, const GridResolution& res);

/// Copy of `field` refined to `res` (see Field::upsample).
HexPlaneField upsampled(const HexPlaneField& field, const GridResolution& res);

}  // namespace hexplane
