#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hexplane/field.hpp"

namespace hexplane {

enum class DecoderKind : std::uint8_t { MLP = 0, SH = 1 };

std::string to_string(DecoderKind kind);
DecoderKind decoder_kind_from_string(const std::string& name);

/// Batched colour decoding. Features are F x N, directions 3 x N (unit),
/// colours 3 x N.
class ColorDecoder {
 public:
  virtual ~ColorDecoder() = default;

  virtual DecoderKind kind() const = 0;
  virtual int feature_dim() const = 0;

  virtual void forward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs,
                       Eigen::MatrixXd& rgb) const = 0;

  /// Adjoint of forward for the same inputs. Writes dL/dfeatures and
  /// accumulates parameter gradients into `grads` (parameters() order).
  virtual void backward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs,
                        const Eigen::MatrixXd& d_rgb, Eigen::MatrixXd& d_features,
                        GradSlabs grads) const = 0;

  virtual std::vector<ParamView> parameters() = 0;
  virtual std::unique_ptr<ColorDecoder> clone() const = 0;
  /// Fingerprint of the smooth piece the inputs fall in (ReLU signs, clamp
  /// states). Equal fingerprints mean no kink lies between two evaluations.
  virtual std::uint64_t regime(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs) const = 0;

  std::vector<std::size_t> slab_sizes() const;
  Eigen::Vector3d decode(std::span<const double> feature, const Eigen::Vector3d& dir) const;
};

inline std::uint64_t regime_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h * 0xbf58476d1ce4e5b9ull;
}

/// View-direction encoding: the direction itself followed by sin and cos of
/// 2^k * d for k < octaves (3 + 6 * octaves values).
int view_encoding_dim(int octaves);
void encode_view(const Eigen::Vector3d& d, int octaves, double* out);

/// Input (F + encoding) -> hidden -> hidden -> 3 with ReLU and a sigmoid head.
class TinyMLP final : public ColorDecoder {
 public:
  struct Config {
    int feature_dim = 27;
    int hidden = 64;
    int octaves = 2;
  };

  /// PyTorch-style init: weights and biases uniform in +-1/sqrt(fan_in).
  TinyMLP(const Config& config, std::mt19937_64& rng);
  /// Zero weights and biases.
  explicit TinyMLP(const Config& config);

  DecoderKind kind() const override { return DecoderKind::MLP; }
  int feature_dim() const override { return config_.feature_dim; }
  int input_dim() const { return config_.feature_dim + view_encoding_dim(config_.octaves); }
  const Config& config() const { return config_; }

  void forward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs, Eigen::MatrixXd& rgb) const override;
  void backward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs, const Eigen::MatrixXd& d_rgb,
                Eigen::MatrixXd& d_features, GradSlabs grads) const override;

  std::vector<ParamView> parameters() override;
  std::unique_ptr<ColorDecoder> clone() const override { return std::make_unique<TinyMLP>(*this); }
  std::uint64_t regime(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs) const override;

  /// Row-major weights (out x in) and biases of layer k in {0,1,2}.
  std::vector<float>& weight(int k) { return weights_[k]; }
  std::vector<float>& bias(int k) { return biases_[k]; }
  const std::vector<float>& weight(int k) const { return weights_[k]; }
  const std::vector<float>& bias(int k) const { return biases_[k]; }

 private:
  void allocate();
  Eigen::MatrixXd inputs(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs) const;

  Config config_;
  std::array<std::vector<float>, 3> weights_;
  std::array<std::vector<float>, 3> biases_;
  std::array<int, 4> dims_{};
};

/// Real spherical-harmonic basis up to degree 2 (9 values).
void sh_basis(const Eigen::Vector3d& d, double* out);

/// Degree-2 SH colour head: features are 27 coefficients laid out
/// channel-major (c * 9 + k); output is clamped to [0, 1].
class SHDecoder final : public ColorDecoder {
 public:
  DecoderKind kind() const override { return DecoderKind::SH; }
  int feature_dim() const override { return 27; }

  void forward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs, Eigen::MatrixXd& rgb) const override;
  void backward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs, const Eigen::MatrixXd& d_rgb,
                Eigen::MatrixXd& d_features, GradSlabs grads) const override;

  std::vector<ParamView> parameters() override { return {}; }
  std::unique_ptr<ColorDecoder> clone() const override { return std::make_unique<SHDecoder>(*this); }
  std::uint64_t regime(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs) const override;
};

/// Single-point SH decode.
Eigen::Vector3d sh_decode(std::span<const double> coeffs, const Eigen::Vector3d& dir);

}  // namespace hexplane
