#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "repeaterlab/experiments.h"
#include "repeaterlab/hardware.h"

namespace repeaterlab {

struct GlobalSettings {
  std::uint64_t base_seed{1};
  std::string output_dir{"results"};
  /// Defaults for every sweep that does not override them.
  ExperimentSettings settings;
};

struct ConfigFile {
  GlobalSettings global;
  /// Profiles defined in the file; built-in profiles remain reachable by name.
  std::map<std::string, HardwareProfile> profiles;
  /// Sweeps in file order, with global defaults already applied.
  std::vector<SweepSpec> sweeps;

  /// File profile first, then built-in. Throws ConfigError when unknown.
  const HardwareProfile& profile(const std::string& name) const;
  /// Throws ConfigError when unknown.
  const SweepSpec& sweep(const std::string& name) const;
};

/// Parses and validates. Errors name the offending key; unknown keys are
/// rejected at every level.
ConfigFile parse_config(const nlohmann::ordered_json& doc);
ConfigFile parse_config_text(const std::string& text);
ConfigFile load_config(const std::filesystem::path& path);

/// Fully explicit form: parse_config(config_to_json(c)) reproduces c.
nlohmann::ordered_json config_to_json(const ConfigFile& config);
nlohmann::ordered_json profile_to_json(const HardwareProfile& profile);

}  // namespace repeaterlab
