#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hexplane/model.hpp"
#include "hexplane/trainer.hpp"

namespace hexplane {

nlohmann::json model_config_to_json(const ModelConfig& config);
/// Missing keys keep their defaults; unknown keys raise ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& doc);

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

/// Everything a `train` invocation needs.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& doc);

/// Reads a JSON config file. Parse failures are ConfigError, a missing file
/// is IoError.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Applies "a.b.c=value" to `doc`. The value is parsed as JSON when possible
/// and taken as a string otherwise. The path must exist in `schema`.
void apply_override(nlohmann::json& doc, const std::string& assignment, const nlohmann::json& schema);

struct AblationVariant {
  std::string name;
  ModelConfig model;
};

/// Model variants swept by an ablation axis: "factorization" (4 field
/// kinds), "fusion" (stage one multiply|sum x stage two concat|sum|multiply),
/// "planes" (5 plane layouts) or "rank" (base ranks scaled by 1/2, 1, 2).
std::vector<AblationVariant> ablation_variants(const std::string& axis, const ModelConfig& base);

GridResolution resolution_from_json(const nlohmann::json& j);
nlohmann::json resolution_to_json(const GridResolution& r);

}  // namespace hexplane
