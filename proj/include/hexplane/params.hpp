#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hexplane/checkpoint.hpp"
#include "hexplane/field.hpp"

namespace hexplane {

/// Flat, named views of every learnable array of a model.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::vector<ParamView> slabs);

  const std::vector<ParamView>& slabs() const { return slabs_; }
  std::vector<ParamView>& slabs() { return slabs_; }
  std::size_t size() const { return slabs_.size(); }
  std::size_t total() const;
  /// Index of a slab by name; throws ConfigError when absent.
  std::size_t find(const std::string& name) const;

 private:
  std::vector<ParamView> slabs_;
};

/// Gradient storage congruent with a ParamStore.
class GradStore {
 public:
  GradStore() = default;
  explicit GradStore(const ParamStore& params);

  void zero();
  std::size_t size() const { return data_.size(); }
  std::vector<float>& operator[](std::size_t i) { return data_[i]; }
  const std::vector<float>& operator[](std::size_t i) const { return data_[i]; }
  /// Spans for slabs [first, first + count).
  std::vector<std::span<float>> spans(std::size_t first, std::size_t count);
  bool congruent(const ParamStore& params) const;

 private:
  std::vector<std::vector<float>> data_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// Adam moments. Each slab keeps its own step count so that a slab whose
/// moments were reset restarts its bias correction.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::vector<std::int64_t> steps;

  AdamState() = default;
  AdamState(const ParamStore& params, AdamConfig config = {});

  /// Zero the moments and step count of one slab, resizing to `size`.
  void reset_slab(std::size_t i, std::size_t size);

  std::vector<Slab> to_slabs(const ParamStore& params) const;
  static AdamState from_slabs(const ParamStore& params, const std::vector<Slab>& slabs, AdamConfig config = {});
};

/// One bias-corrected Adam update; `lrs` holds one learning rate per slab.
void adam_step(ParamStore& params, const GradStore& grads, AdamState& state, std::span<const double> lrs);

/// lr0 * ratio^(iter / total_iters).
double decayed_lr(double lr0, double ratio, std::int64_t iter, std::int64_t total_iters);

/// Loss evaluator. When `grads` is non-null it must also accumulate the
/// analytic gradient into it.
using LossFunction = std::function<double(GradStore* grads)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  std::size_t probes = 0;
  std::vector<std::string> probe_slabs;  // slab name per probe
  std::string worst_slab;
  /// Probes redrawn because the stencil crossed a kink.
  std::size_t rejected = 0;
};

struct GradCheckOptions {
  std::size_t n_probes = 200;
  double h = 1e-3;
  std::uint64_t seed = 0;
  /// Denominator floor so probes with vanishing gradients don't dominate.
  double abs_floor = 1e-6;
  /// Only probe entries whose analytic gradient magnitude exceeds this.
  double min_grad = 0.0;
  /// Optional: fingerprint of the smooth piece hit by the latest loss call.
  /// A probe whose +h or -h evaluation lands on another piece is redrawn,
  /// since a central difference across a kink is no derivative estimate.
  std::function<std::uint64_t()> regime;
  /// Upper bound on redrawn probes.
  std::size_t max_rejected = 10000;
};

/// Compares the analytic gradient against central differences on random
/// parameter entries. Probes are spread over slabs round-robin.
/// Error = |analytic - numeric| / max(|analytic|, |numeric|, abs_floor).
GradCheckReport grad_check(ParamStore& params, const LossFunction& loss, const GradCheckOptions& options);

}  // namespace hexplane
