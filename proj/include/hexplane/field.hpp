#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hexplane/core.hpp"

namespace hexplane {

/// Learning-rate group a parameter slab belongs to.
enum class ParamGroup : std::uint8_t {
  Grid,   // planes, spatial lines and time lines
  Dense,  // basis matrices and decoder weights
};

/// A named view onto one learnable array. For Grid slabs `axes` names the
/// leading (grid) dimensions of `shape`; the trailing dimension is channels.
struct ParamView {
  std::string name;
  std::vector<int> shape;
  std::vector<Axis> axes;
  std::span<float> values;
  ParamGroup group = ParamGroup::Grid;
};

/// Gradient slabs congruent with a field's parameters(), in the same order.
using GradSlabs = std::span<const std::span<float>>;

struct ParamCount {
  std::size_t plane_params = 0;  // every interpolated grid entry (planes and lines)
  std::size_t basis_params = 0;  // basis / feature matrices
  std::size_t total() const { return plane_params + basis_params; }
  bool operator==(const ParamCount&) const = default;
};

enum class FieldKind : std::uint8_t { HexPlane = 0, VMT = 1, CP = 2, VolumeBasis = 3 };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

/// Dense 4D x F grid, row-major [x][y][z][t][f], 64-bit entries.
struct DenseGrid {
  GridResolution res;
  int features = 0;
  std::vector<double> data;

  std::size_t index(int x, int y, int z, int t, int f = 0) const {
    return ((((static_cast<std::size_t>(x) * res.y + y) * res.z + z) * res.t + t) * features) + f;
  }
  double at(int x, int y, int z, int t, int f) const { return data[index(x, y, z, t, f)]; }
};

/// The queryable 4D feature-field contract shared by HexPlane and the
/// alternative factorizations.
///
/// Fields are read-only during queries and safe to share between threads;
/// mutation (upsampling, optimizer writes through parameters()) needs
/// exclusive access.
class Field {
 public:
  virtual ~Field() = default;

  virtual FieldKind kind() const = 0;
  virtual const AxisDomain& domain() const = 0;
  virtual int feature_dim() const = 0;
  virtual GridResolution resolution() const = 0;

  /// Query at a point already mapped to [0,1]^4. `out` has feature_dim() entries.
  virtual void query_normalized(const Point4& u, std::span<double> out) const = 0;

  /// Exact adjoint of query_normalized: accumulates dL/dparam for the given
  /// dL/dfeature into `grads`.
  virtual void backward_normalized(const Point4& u, std::span<const double> upstream,
                                   GradSlabs grads) const = 0;

  virtual std::vector<ParamView> parameters() = 0;
  virtual ParamCount param_count() const = 0;

  /// Bilinear/linear refinement of every grid; new node counts must not shrink.
  virtual void upsample(const GridResolution& res) = 0;

  virtual std::unique_ptr<Field> clone() const = 0;

  // Convenience wrappers in scene units.
  std::vector<double> query(const Point4& p) const;
  void query(const Point4& p, std::span<double> out) const;
  void backward(const Point4& p, std::span<const double> upstream, GradSlabs grads) const;
  std::vector<std::vector<double>> query_batch(std::span<const Point4> points) const;

  /// Parameter shapes in parameters() order, for building congruent gradient storage.
  std::vector<std::size_t> slab_sizes() const;
};

/// Bytes used by a dense N^3 x T x F volume.
std::uint64_t dense_volume_bytes(std::uint64_t n, std::uint64_t t, std::uint64_t f,
                                 std::uint64_t bytes_per_entry = 4);

}  // namespace hexplane
