#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "netdiag/diagnosis.hpp"
#include "netdiag/evaluation.hpp"

namespace netdiag {

/// Settings shared by every subcommand. Stage objects in the JSON file are
/// partial: missing keys keep the stage default.
struct CliConfig {
  std::string catalog_version = "v1";
  std::uint64_t seed = 1;
  std::string link_profile = "wired-80Mbps-10ms";
  PipelineConfig lpd = default_lpd_config();
  /// One entry per registered fault.
  std::map<std::string, PipelineConfig> cfd;
  FaultRegistry fault_registry = default_fault_registry();
  /// When set, `train --stage lpd` runs a CV grid search before fitting.
  std::optional<GridSpec> lpd_grid;
  std::size_t grid_folds = 5;
  std::optional<std::filesystem::path> bundle_path;

  CliConfig();

  /// Stage config with the global seed applied.
  PipelineConfig lpd_stage() const;
  std::map<std::string, PipelineConfig> cfd_stages() const;

  /// Throws ConfigError.
  void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base);
nlohmann::json to_json(const PipelineConfig& config);

/// Strict: unknown keys and wrong types throw ConfigError.
CliConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CliConfig& config);
CliConfig load_config(const std::filesystem::path& path);

}  // namespace netdiag
