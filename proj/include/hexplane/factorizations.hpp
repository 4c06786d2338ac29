#pragma once

#include <array>
#include <random>
#include <vector>

#include "hexplane/feature_grid.hpp"
#include "hexplane/field.hpp"
#include "hexplane/hexplane_field.hpp"

namespace hexplane {

/// Matrix-vector component group: a spatial plane times the line along the
/// remaining spatial axis.
struct VMGroup {
  FeaturePlane plane;
  FeatureLine line;
};

/// Plane/line axes of the three VM groups: XY*Z, XZ*Y, ZY*X.
std::array<std::array<Axis, 3>, 3> vm_group_axes();

struct VMTConfig {
  GridResolution resolution{32, 32, 32, 20};
  std::array<int, 3> ranks{24, 24, 24};
  int feature_dim = 27;
  AxisDomain domain{};
  float init_scale = 0.1f;
};

/// Vector-matrix decomposition with a learned piecewise-linear time weight
/// per component and per group.
class VMTField final : public Field {
 public:
  VMTField(const VMTConfig& config, std::mt19937_64& rng);
  VMTField(std::array<VMGroup, 3> groups, std::array<TimeLine, 3> time_lines, FeatureBasis features,
           AxisDomain domain, GridResolution resolution);

  FieldKind kind() const override { return FieldKind::VMT; }
  const AxisDomain& domain() const override { return domain_; }
  int feature_dim() const override { return features_.cols; }
  GridResolution resolution() const override { return resolution_; }
  void query_normalized(const Point4& u, std::span<double> out) const override;
  void backward_normalized(const Point4& u, std::span<const double> upstream,
                           GradSlabs grads) const override;
  std::vector<ParamView> parameters() override;
  ParamCount param_count() const override;
  void upsample(const GridResolution& res) override;
  std::unique_ptr<Field> clone() const override;

  std::array<VMGroup, 3>& groups() { return groups_; }
  const std::array<VMGroup, 3>& groups() const { return groups_; }
  std::array<TimeLine, 3>& time_lines() { return time_lines_; }
  const std::array<TimeLine, 3>& time_lines() const { return time_lines_; }
  FeatureBasis& features() { return features_; }
  const FeatureBasis& features() const { return features_; }

  void validate() const;

 private:
  std::array<VMGroup, 3> groups_;
  std::array<TimeLine, 3> time_lines_;
  FeatureBasis features_;  // rows R1+R2+R3, stacked per group
  AxisDomain domain_;
  GridResolution resolution_;
};

struct CPConfig {
  GridResolution resolution{32, 32, 32, 20};
  int rank = 48;
  int feature_dim = 27;
  AxisDomain domain{};
  float init_scale = 0.1f;
};

/// Rank-R CP decomposition: one 1D grid per axis (X, Y, Z, T).
class CPField final : public Field {
 public:
  CPField(const CPConfig& config, std::mt19937_64& rng);
  CPField(std::array<FeatureLine, 4> lines, FeatureBasis features, AxisDomain domain);

  FieldKind kind() const override { return FieldKind::CP; }
  const AxisDomain& domain() const override { return domain_; }
  int feature_dim() const override { return features_.cols; }
  GridResolution resolution() const override;
  void query_normalized(const Point4& u, std::span<double> out) const override;
  void backward_normalized(const Point4& u, std::span<const double> upstream,
                           GradSlabs grads) const override;
  std::vector<ParamView> parameters() override;
  ParamCount param_count() const override;
  void upsample(const GridResolution& res) override;
  std::unique_ptr<Field> clone() const override;

  std::array<FeatureLine, 4>& lines() { return lines_; }
  const std::array<FeatureLine, 4>& lines() const { return lines_; }
  FeatureBasis& features() { return features_; }
  const FeatureBasis& features() const { return features_; }
  int rank() const { return lines_[0].channels; }

  void validate() const;

 private:
  std::array<FeatureLine, 4> lines_;  // indexed by Axis
  FeatureBasis features_;
  AxisDomain domain_;
};

/// One static VM-decomposed 3D volume (three groups plus feature vectors).
struct StaticVolume {
  std::array<VMGroup, 3> groups;
  FeatureBasis features;
};

struct VolumeBasisConfig {
  GridResolution resolution{32, 32, 32, 20};
  int basis_count = 8;
  std::array<int, 3> ranks{16, 16, 16};
  int feature_dim = 27;
  AxisDomain domain{};
  float init_scale = 0.1f;
};

/// Time-weighted mixture of shared static volumes; the weights come from a
/// single time line with one channel per volume.
class VolumeBasisField final : public Field {
 public:
  VolumeBasisField(const VolumeBasisConfig& config, std::mt19937_64& rng);
  VolumeBasisField(std::vector<StaticVolume> volumes, TimeLine weights, AxisDomain domain,
                   GridResolution resolution);

  FieldKind kind() const override { return FieldKind::VolumeBasis; }
  const AxisDomain& domain() const override { return domain_; }
  int feature_dim() const override { return volumes_.front().features.cols; }
  GridResolution resolution() const override { return resolution_; }
  void query_normalized(const Point4& u, std::span<double> out) const override;
  void backward_normalized(const Point4& u, std::span<const double> upstream,
                           GradSlabs grads) const override;
  std::vector<ParamView> parameters() override;
  ParamCount param_count() const override;
  void upsample(const GridResolution& res) override;
  std::unique_ptr<Field> clone() const override;

  std::vector<StaticVolume>& volumes() { return volumes_; }
  const std::vector<StaticVolume>& volumes() const { return volumes_; }
  TimeLine& weights() { return weights_; }
  const TimeLine& weights() const { return weights_; }

  void validate() const;

 private:
  std::vector<StaticVolume> volumes_;
  TimeLine weights_;
  AxisDomain domain_;
  GridResolution resolution_;
};

/// Static (time-independent) VM query of one volume: Σ_g Σ_r M·v·feature.
void query_static_volume(const StaticVolume& volume, const Point4& u, std::span<double> out);

/// Embeds a CP field into an equivalent HexPlane field (multiply-concat,
/// full layout). The first group carries the CP components as rank-1 outer
/// products; the other two groups are zero.
HexPlaneField embed_cp_in_hexplane(const CPField& cp);

}  // namespace hexplane
