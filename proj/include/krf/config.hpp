#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "krf/flow.hpp"
#include "krf/model_spec.hpp"
#include "krf/verdicts.hpp"

namespace krf {

struct RunConfig {
  std::string name = "run";
  ModelSpec model;
  StepSchedule schedule;
  // Observable columns written to series.csv; empty means all.
  std::vector<std::string> estimators;
  // Registry subset; empty means the full registry.
  std::vector<std::string> registry;
  VerdictTolerances tolerances;
  bool fail_on_verdicts = true;
  // "spr" or "ske".
  std::string mode = "spr";
  std::string output_dir;
  bool write_snapshots = true;
};

// Parses a YAML document. Unknown keys and bad values raise ConfigError
// naming the key and its line.
RunConfig parse_config(const YAML::Node& root, const std::string& source = "<config>");
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Full, explicit YAML form of a config; parsing it gives back the same config.
YAML::Node config_to_yaml(const RunConfig& cfg);
std::string dump_config(const RunConfig& cfg);

}  // namespace krf
