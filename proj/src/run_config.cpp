#include "hexplane/run_config.hpp"

#include <algorithm>
#include <fstream>

namespace hexplane {

using nlohmann::json;

namespace {

// Every key of `doc` must appear in `schema`, recursively through objects.
void check_keys(const json& doc, const json& schema, const std::string& prefix) {
  if (!doc.is_object()) throw ConfigError("'" + (prefix.empty() ? std::string("config") : prefix) + "' must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!schema.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
    const json& s = schema[it.key()];
    if (s.is_object()) check_keys(it.value(), s, path);
  }
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::array<int, 3> ranks_from_json(const json& j, const char* key) {
  const auto v = get<std::vector<int>>(j, key);
  if (v.size() != 3) throw ConfigError(std::string("'") + key + "' needs three ranks");
  return {v[0], v[1], v[2]};
}

Eigen::Vector3d vec3_from_json(const json& j, const char* key) {
  const auto v = get<std::vector<double>>(j, key);
  if (v.size() != 3) throw ConfigError(std::string("'") + key + "' needs three values");
  return {v[0], v[1], v[2]};
}

json merged(const json& defaults, const json& doc) {
  check_keys(doc, defaults, "");
  json full = defaults;
  full.merge_patch(doc);
  return full;
}

}  // namespace

GridResolution resolution_from_json(const json& j) {
  std::vector<int> v;
  try {
    v = j.get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad resolution: ") + e.what());
  }
  if (v.size() != 4) throw ConfigError("a resolution is [x, y, z, t]");
  return GridResolution{v[0], v[1], v[2], v[3]};
}

json resolution_to_json(const GridResolution& r) { return json::array({r.x, r.y, r.z, r.t}); }

json model_config_to_json(const ModelConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["domain"] = {{"space_min", {c.domain.space_min.x(), c.domain.space_min.y(), c.domain.space_min.z()}},
                 {"space_max", {c.domain.space_max.x(), c.domain.space_max.y(), c.domain.space_max.z()}},
                 {"time_min", c.domain.time_min},
                 {"time_max", c.domain.time_max}};
  j["resolution"] = resolution_to_json(c.resolution);
  j["opacity_ranks"] = c.opacity_ranks;
  j["appearance_ranks"] = c.appearance_ranks;
  j["feature_dim"] = c.feature_dim;
  j["fusion"] = {{"stage_one", to_string(c.fusion.stage_one)}, {"stage_two", to_string(c.fusion.stage_two)}};
  j["layout"] = to_string(c.layout);
  j["cp_opacity_rank"] = c.cp_opacity_rank;
  j["cp_appearance_rank"] = c.cp_appearance_rank;
  j["basis_count"] = c.basis_count;
  j["init_scale"] = c.init_scale;
  j["decoder"] = to_string(c.decoder);
  j["mlp_hidden"] = c.mlp_hidden;
  j["mlp_octaves"] = c.mlp_octaves;
  j["coords"] = to_string(c.coords);
  j["ndc"] = {{"width", c.ndc.width}, {"height", c.ndc.height}, {"focal", c.ndc.focal}, {"near", c.ndc.near}};
  j["spherical_near"] = c.spherical_near;
  j["n_samples"] = c.n_samples;
  j["density_shift"] = c.density_shift;
  j["weight_cutoff"] = c.weight_cutoff;
  return j;
}

ModelConfig model_config_from_json(const json& doc) {
  const json j = merged(model_config_to_json(ModelConfig{}), doc);
  ModelConfig c;
  c.kind = field_kind_from_string(get<std::string>(j, "kind"));
  const json& d = j["domain"];
  c.domain.space_min = vec3_from_json(d, "space_min");
  c.domain.space_max = vec3_from_json(d, "space_max");
  c.domain.time_min = get<double>(d, "time_min");
  c.domain.time_max = get<double>(d, "time_max");
  c.resolution = resolution_from_json(j["resolution"]);
  c.opacity_ranks = ranks_from_json(j, "opacity_ranks");
  c.appearance_ranks = ranks_from_json(j, "appearance_ranks");
  c.feature_dim = get<int>(j, "feature_dim");
  c.fusion.stage_one = fusion_op_from_string(get<std::string>(j["fusion"], "stage_one"));
  c.fusion.stage_two = fusion_op_from_string(get<std::string>(j["fusion"], "stage_two"));
  c.layout = plane_layout_from_string(get<std::string>(j, "layout"));
  c.cp_opacity_rank = get<int>(j, "cp_opacity_rank");
  c.cp_appearance_rank = get<int>(j, "cp_appearance_rank");
  c.basis_count = get<int>(j, "basis_count");
  c.init_scale = get<float>(j, "init_scale");
  c.decoder = decoder_kind_from_string(get<std::string>(j, "decoder"));
  c.mlp_hidden = get<int>(j, "mlp_hidden");
  c.mlp_octaves = get<int>(j, "mlp_octaves");
  c.coords = coord_system_from_string(get<std::string>(j, "coords"));
  c.ndc.width = get<int>(j["ndc"], "width");
  c.ndc.height = get<int>(j["ndc"], "height");
  c.ndc.focal = get<double>(j["ndc"], "focal");
  c.ndc.near = get<double>(j["ndc"], "near");
  c.spherical_near = get<double>(j, "spherical_near");
  c.n_samples = get<int>(j, "n_samples");
  c.density_shift = get<double>(j, "density_shift");
  c.weight_cutoff = get<double>(j, "weight_cutoff");
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  json j;
  j["batch_rays"] = c.batch_rays;
  j["total_iters"] = c.total_iters;
  j["lr_grid"] = c.lr_grid;
  j["lr_dense"] = c.lr_dense;
  j["lr_decay_ratio"] = c.lr_decay_ratio;
  j["tv_spatial"] = c.tv_spatial;
  j["tv_temporal"] = c.tv_temporal;
  j["upsample_iters"] = c.upsample_iters;
  j["upsample_resolutions"] = json::array();
  for (const auto& r : c.upsample_resolutions) j["upsample_resolutions"].push_back(resolution_to_json(r));
  j["voxel_iters"] = c.voxel_iters;
  j["voxel_res"] = c.voxel_res;
  j["voxel_time_samples"] = c.voxel_time_samples;
  j["voxel_threshold"] = c.voxel_threshold;
  j["jitter"] = c.jitter;
  j["log_every"] = c.log_every;
  j["deterministic"] = c.deterministic;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

TrainConfig train_config_from_json(const json& doc) {
  const json j = merged(train_config_to_json(TrainConfig{}), doc);
  TrainConfig c;
  c.batch_rays = get<int>(j, "batch_rays");
  c.total_iters = get<std::int64_t>(j, "total_iters");
  c.lr_grid = get<double>(j, "lr_grid");
  c.lr_dense = get<double>(j, "lr_dense");
  c.lr_decay_ratio = get<double>(j, "lr_decay_ratio");
  c.tv_spatial = get<double>(j, "tv_spatial");
  c.tv_temporal = get<double>(j, "tv_temporal");
  c.upsample_iters = get<std::vector<std::int64_t>>(j, "upsample_iters");
  if (!j["upsample_resolutions"].is_array()) throw ConfigError("'upsample_resolutions' must be a list");
  for (const auto& r : j["upsample_resolutions"]) c.upsample_resolutions.push_back(resolution_from_json(r));
  c.voxel_iters = get<std::vector<std::int64_t>>(j, "voxel_iters");
  c.voxel_res = get<int>(j, "voxel_res");
  c.voxel_time_samples = get<int>(j, "voxel_time_samples");
  c.voxel_threshold = get<double>(j, "voxel_threshold");
  c.jitter = get<bool>(j, "jitter");
  c.log_every = get<std::int64_t>(j, "log_every");
  c.deterministic = get<bool>(j, "deterministic");
  c.checkpoint_every = get<std::int64_t>(j, "checkpoint_every");
  c.validate();
  return c;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

json run_config_to_json(const RunConfig& c) {
  return json{{"model", model_config_to_json(c.model)},
              {"train", train_config_to_json(c.train)},
              {"dataset", c.dataset},
              {"out", c.out},
              {"seed", c.seed},
              {"threads", c.threads}};
}

RunConfig run_config_from_json(const json& doc) {
  const json j = merged(run_config_to_json(RunConfig{}), doc);
  RunConfig c;
  c.model = model_config_from_json(j["model"]);
  c.train = train_config_from_json(j["train"]);
  c.dataset = get<std::string>(j, "dataset");
  c.out = get<std::string>(j, "out");
  c.seed = get<std::uint64_t>(j, "seed");
  c.threads = get<int>(j, "threads");
  c.train.seed = c.seed;
  c.train.threads = c.threads;
  c.validate();
  return c;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment, const json& schema) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  const json* s = &schema;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty() || !s->is_object() || !s->contains(part)) throw ConfigError("unknown config key '" + key + "'");
    s = &(*s)[part];
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

std::vector<AblationVariant> ablation_variants(const std::string& axis, const ModelConfig& base) {
  std::vector<AblationVariant> out;
  if (axis == "factorization") {
    for (FieldKind k : {FieldKind::HexPlane, FieldKind::VMT, FieldKind::CP, FieldKind::VolumeBasis}) {
      ModelConfig m = base;
      m.kind = k;
      out.push_back({to_string(k), m});
    }
  } else if (axis == "fusion") {
    for (FusionOp one : {FusionOp::Multiply, FusionOp::Sum}) {
      for (FusionOp two : {FusionOp::Concat, FusionOp::Sum, FusionOp::Multiply}) {
        ModelConfig m = base;
        m.kind = FieldKind::HexPlane;
        m.fusion = {one, two};
        out.push_back({to_string(m.fusion), m});
      }
    }
  } else if (axis == "planes") {
    for (PlaneLayout l : {PlaneLayout::Full, PlaneLayout::SpatialOnly, PlaneLayout::TemporalOnly, PlaneLayout::Double,
                          PlaneLayout::Swap}) {
      ModelConfig m = base;
      m.kind = FieldKind::HexPlane;
      m.layout = l;
      out.push_back({to_string(l), m});
    }
  } else if (axis == "rank") {
    for (int mult : {1, 2, 4}) {
      ModelConfig m = base;
      for (auto* ranks : {&m.opacity_ranks, &m.appearance_ranks}) {
        for (int& r : *ranks) r = std::max(1, r * mult / 2);
      }
      std::string name = "rank";
      for (int r : m.appearance_ranks) name += "_" + std::to_string(r);
      out.push_back({name, m});
    }
  } else {
    throw ConfigError("unknown ablation axis '" + axis + "' (factorization|fusion|planes|rank)");
  }
  for (const auto& v : out) v.model.validate();
  return out;
}

}  // namespace hexplane
