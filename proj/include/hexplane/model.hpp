#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>

#include "hexplane/camera.hpp"
#include "hexplane/decoder.hpp"
#include "hexplane/field.hpp"
#include "hexplane/fusion.hpp"
#include "hexplane/hexplane_field.hpp"
#include "hexplane/image.hpp"
#include "hexplane/params.hpp"
#include "hexplane/render.hpp"

namespace hexplane {

/// Hyperparameters of a full scene model: an opacity field (one feature), an
/// appearance field and a colour decoder.
struct ModelConfig {
  FieldKind kind = FieldKind::HexPlane;
  AxisDomain domain{};
  GridResolution resolution{33, 33, 33, 20};
  std::array<int, 3> opacity_ranks{8, 8, 8};
  std::array<int, 3> appearance_ranks{8, 8, 8};
  int feature_dim = 27;
  FusionScheme fusion{};
  PlaneLayout layout = PlaneLayout::Full;
  int cp_opacity_rank = 48;
  int cp_appearance_rank = 96;
  int basis_count = 8;
  float init_scale = 0.1f;
  DecoderKind decoder = DecoderKind::MLP;
  int mlp_hidden = 64;
  int mlp_octaves = 2;
  CoordSystem coords = CoordSystem::Cartesian;
  NdcParams ndc{};
  double spherical_near = 1.0;
  int n_samples = 64;
  double density_shift = -2.25;
  double weight_cutoff = 1e-4;

  void validate() const;
};

std::unique_ptr<Field> make_field(const ModelConfig& config, bool opacity, std::mt19937_64& rng);

class Model {
 public:
  Model() = default;
  Model(const ModelConfig& config, std::uint64_t seed);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  ModelConfig& config() { return config_; }
  Field& opacity() { return *opacity_; }
  const Field& opacity() const { return *opacity_; }
  Field& appearance() { return *appearance_; }
  const Field& appearance() const { return *appearance_; }
  ColorDecoder& decoder() { return *decoder_; }
  const ColorDecoder& decoder() const { return *decoder_; }
  EmptinessVoxel& voxel() { return voxel_; }
  const EmptinessVoxel& voxel() const { return voxel_; }

  void set_parts(ModelConfig config, std::unique_ptr<Field> opacity, std::unique_ptr<Field> appearance,
                 std::unique_ptr<ColorDecoder> decoder, EmptinessVoxel voxel);

  /// Slabs named "opacity.*", "appearance.*" then "decoder.*".
  ParamStore params();
  std::size_t opacity_slab_count() const;
  std::size_t appearance_slab_count() const;
  std::size_t decoder_slab_count() const;

  /// Splits a GradStore from params() into per-component spans.
  RenderGrads split(GradStore& grads) const;

  SceneModelView view(bool use_voxel = true) const;

  /// Renderer settings implied by the config; sampling is deterministic
  /// (no jitter) unless the caller changes it.
  RenderSettings render_settings(int threads = 1) const;

  /// Rays for a camera in the model's coordinate system.
  RayBatch rays(const Camera& camera, double time) const;

  void upsample(const GridResolution& res);

 private:
  ModelConfig config_;
  std::unique_ptr<Field> opacity_;
  std::unique_ptr<Field> appearance_;
  std::unique_ptr<ColorDecoder> decoder_;
  EmptinessVoxel voxel_;
};

/// Rays for a camera under a coordinate system (NDC rays are projected).
RayBatch model_rays(const ModelConfig& config, const Camera& camera, double time);

/// Renders a full image (and optionally its depth map).
Image render_image(const Model& model, const Camera& camera, double time, const RenderSettings& settings,
                   std::vector<double>* depth = nullptr, RenderStats* stats = nullptr);

/// Saves to a directory: model.json, opacity.hexf, appearance.hexf,
/// decoder.hexs and, when built, voxel.hexv.
void save_model(const std::filesystem::path& dir, const Model& model);
Model load_model(const std::filesystem::path& dir);

}  // namespace hexplane
