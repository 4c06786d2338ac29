#include "hexplane/model.hpp"

#include <fstream>

#include "hexplane/checkpoint.hpp"
#include "hexplane/factorizations.hpp"
#include "hexplane/run_config.hpp"

namespace hexplane {

void ModelConfig::validate() const {
  domain.validate();
  for (Axis a : {Axis::X, Axis::Y, Axis::Z, Axis::T}) {
    if (resolution.along(a) < 2) throw ConfigError("model resolution must be at least 2 on every axis");
  }
  for (int r : opacity_ranks) {
    if (r < 0) throw ConfigError("ranks must be non-negative");
  }
  for (int r : appearance_ranks) {
    if (r < 0) throw ConfigError("ranks must be non-negative");
  }
  if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
  if (decoder == DecoderKind::SH && feature_dim != 27) throw ConfigError("the SH decoder needs feature_dim = 27");
  if (n_samples < 1) throw ConfigError("n_samples must be positive");
  if (cp_opacity_rank < 1 || cp_appearance_rank < 1 || basis_count < 1) {
    throw ConfigError("CP ranks and basis_count must be positive");
  }
  if (!(init_scale > 0.0f)) throw ConfigError("init_scale must be positive");
  if (!(spherical_near > 0.0)) throw ConfigError("spherical_near must be positive");
}

namespace {

AxisDomain field_domain(const ModelConfig& c) {
  if (c.coords == CoordSystem::Spherical) return spherical_domain(c.domain.time_min, c.domain.time_max);
  return c.domain;
}

}  // namespace

std::unique_ptr<Field> make_field(const ModelConfig& c, bool opacity, std::mt19937_64& rng) {
  const int f = opacity ? 1 : c.feature_dim;
  const auto& ranks = opacity ? c.opacity_ranks : c.appearance_ranks;
  const AxisDomain domain = field_domain(c);
  switch (c.kind) {
    case FieldKind::HexPlane: {
      HexPlaneConfig hc;
      hc.resolution = c.resolution;
      hc.ranks = ranks;
      hc.feature_dim = f;
      hc.fusion = c.fusion;
      hc.layout = c.layout;
      hc.domain = domain;
      hc.init_scale = c.init_scale;
      return std::make_unique<HexPlaneField>(hc, rng);
    }
    case FieldKind::VMT: {
      VMTConfig vc;
      vc.resolution = c.resolution;
      vc.ranks = ranks;
      vc.feature_dim = f;
      vc.domain = domain;
      vc.init_scale = c.init_scale;
      return std::make_unique<VMTField>(vc, rng);
    }
    case FieldKind::CP: {
      CPConfig cc;
      cc.resolution = c.resolution;
      cc.rank = opacity ? c.cp_opacity_rank : c.cp_appearance_rank;
      cc.feature_dim = f;
      cc.domain = domain;
      cc.init_scale = c.init_scale;
      return std::make_unique<CPField>(cc, rng);
    }
    case FieldKind::VolumeBasis: {
      VolumeBasisConfig bc;
      bc.resolution = c.resolution;
      bc.basis_count = c.basis_count;
      bc.ranks = ranks;
      bc.feature_dim = f;
      bc.domain = domain;
      bc.init_scale = c.init_scale;
      return std::make_unique<VolumeBasisField>(bc, rng);
    }
  }
  throw ConfigError("unknown field kind");
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  opacity_ = make_field(config_, true, rng);
  appearance_ = make_field(config_, false, rng);
  if (config_.decoder == DecoderKind::MLP) {
    TinyMLP::Config mc;
    mc.feature_dim = config_.feature_dim;
    mc.hidden = config_.mlp_hidden;
    mc.octaves = config_.mlp_octaves;
    decoder_ = std::make_unique<TinyMLP>(mc, rng);
  } else {
    decoder_ = std::make_unique<SHDecoder>();
  }
}

Model::Model(const Model& o)
    : config_(o.config_),
      opacity_(o.opacity_ ? o.opacity_->clone() : nullptr),
      appearance_(o.appearance_ ? o.appearance_->clone() : nullptr),
      decoder_(o.decoder_ ? o.decoder_->clone() : nullptr),
      voxel_(o.voxel_) {}

Model& Model::operator=(const Model& o) {
  if (this != &o) {
    Model copy(o);
    *this = std::move(copy);
  }
  return *this;
}

void Model::set_parts(ModelConfig config, std::unique_ptr<Field> opacity, std::unique_ptr<Field> appearance,
                      std::unique_ptr<ColorDecoder> decoder, EmptinessVoxel voxel) {
  config_ = std::move(config);
  opacity_ = std::move(opacity);
  appearance_ = std::move(appearance);
  decoder_ = std::move(decoder);
  voxel_ = std::move(voxel);
}

ParamStore Model::params() {
  std::vector<ParamView> all;
  for (auto v : opacity_->parameters()) {
    v.name = "opacity." + v.name;
    all.push_back(std::move(v));
  }
  for (auto v : appearance_->parameters()) {
    v.name = "appearance." + v.name;
    all.push_back(std::move(v));
  }
  for (auto v : decoder_->parameters()) {
    v.name = "decoder." + v.name;
    all.push_back(std::move(v));
  }
  return ParamStore(std::move(all));
}

std::size_t Model::opacity_slab_count() const { return opacity_->slab_sizes().size(); }
std::size_t Model::appearance_slab_count() const { return appearance_->slab_sizes().size(); }
std::size_t Model::decoder_slab_count() const { return decoder_->slab_sizes().size(); }

RenderGrads Model::split(GradStore& grads) const {
  const std::size_t a = opacity_slab_count();
  const std::size_t b = appearance_slab_count();
  const std::size_t c = decoder_slab_count();
  RenderGrads g;
  g.opacity = grads.spans(0, a);
  g.appearance = grads.spans(a, b);
  g.decoder = grads.spans(a + b, c);
  return g;
}

SceneModelView Model::view(bool use_voxel) const {
  return SceneModelView{opacity_.get(), appearance_.get(), decoder_.get(),
                        use_voxel && !voxel_.empty() ? &voxel_ : nullptr};
}

RenderSettings Model::render_settings(int threads) const {
  RenderSettings s;
  s.sampling.n_samples = config_.n_samples;
  s.sampling.coords = config_.coords;
  s.sampling.jitter = false;
  s.sampling.spherical_near = config_.spherical_near;
  s.density_shift = config_.density_shift;
  s.weight_cutoff = config_.weight_cutoff;
  s.threads = threads;
  return s;
}

RayBatch model_rays(const ModelConfig& config, const Camera& camera, double time) {
  RayBatch rays = rays_for_camera(camera, time);
  if (config.coords == CoordSystem::NDC) return ndc_transform(rays, config.ndc);
  return rays;
}

RayBatch Model::rays(const Camera& camera, double time) const { return model_rays(config_, camera, time); }

void Model::upsample(const GridResolution& res) {
  opacity_->upsample(res);
  appearance_->upsample(res);
  config_.resolution = res;
}

Image render_image(const Model& model, const Camera& camera, double time, const RenderSettings& settings,
                   std::vector<double>* depth, RenderStats* stats) {
  const RayBatch rays = model.rays(camera, time);
  const RenderOutput out = render_rays(model.view(), rays, settings);
  Image img(camera.width, camera.height);
  for (std::size_t i = 0; i < rays.size(); ++i) img.set_pixel(i, out.rgb[i]);
  if (depth) *depth = out.depth;
  if (stats) *stats = out.stats;
  return img;
}

void save_model(const std::filesystem::path& dir, const Model& model) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream os(dir / "model.json", std::ios::trunc);
    if (!os) throw IoError("cannot write " + (dir / "model.json").string());
    os << model_config_to_json(model.config()).dump(2) << '\n';
  }
  save_field(dir / "opacity.hexf", model.opacity());
  save_field(dir / "appearance.hexf", model.appearance());
  std::vector<Slab> slabs;
  for (const auto& v : const_cast<ColorDecoder&>(model.decoder()).parameters()) {
    slabs.push_back(Slab{v.name, v.shape, std::vector<float>(v.values.begin(), v.values.end())});
  }
  save_slabs(dir / "decoder.hexs", slabs);
  std::filesystem::remove(dir / "voxel.hexv", ec);
  if (!model.voxel().empty()) save_voxel(dir / "voxel.hexv", model.voxel());
}

Model load_model(const std::filesystem::path& dir) {
  std::ifstream is(dir / "model.json");
  if (!is) throw IoError("missing " + (dir / "model.json").string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed " + (dir / "model.json").string() + ": " + e.what());
  }
  const ModelConfig config = model_config_from_json(doc);
  auto opacity = load_field(dir / "opacity.hexf");
  auto appearance = load_field(dir / "appearance.hexf");
  std::unique_ptr<ColorDecoder> decoder;
  if (config.decoder == DecoderKind::MLP) {
    TinyMLP::Config mc;
    mc.feature_dim = config.feature_dim;
    mc.hidden = config.mlp_hidden;
    mc.octaves = config.mlp_octaves;
    decoder = std::make_unique<TinyMLP>(mc);
  } else {
    decoder = std::make_unique<SHDecoder>();
  }
  const auto slabs = load_slabs(dir / "decoder.hexs");
  auto views = decoder->parameters();
  if (slabs.size() != views.size()) throw IoError("decoder weights do not match the model config");
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (slabs[i].name != views[i].name || slabs[i].data.size() != views[i].values.size()) {
      throw IoError("decoder slab '" + slabs[i].name + "' does not match the model config");
    }
    std::copy(slabs[i].data.begin(), slabs[i].data.end(), views[i].values.begin());
  }
  EmptinessVoxel voxel;
  if (std::filesystem::exists(dir / "voxel.hexv")) voxel = load_voxel(dir / "voxel.hexv");
  if (opacity->feature_dim() != 1 || appearance->feature_dim() != config.feature_dim) {
    throw IoError("stored fields do not match the model config");
  }
  Model model;
  ModelConfig cfg = config;
  cfg.resolution = opacity->resolution();
  model.set_parts(cfg, std::move(opacity), std::move(appearance), std::move(decoder), std::move(voxel));
  return model;
}

}  // namespace hexplane
