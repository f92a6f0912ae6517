#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "releta/harness.hpp"
#include "releta/ini.hpp"

namespace releta::config {

// Parses the sectioned experiment format ([experiment], [platform],
// [arrivals], [agent], [taskset.<name>], [sweep]); omitted keys take the
// documented defaults. Syntax problems throw Error(kParse) with a line number,
// violated invariants throw Error(kValidation) naming the key.
harness::ExperimentConfig load_config(const std::filesystem::path& path);
harness::ExperimentConfig config_from_ini(const IniDocument& doc, const std::filesystem::path& base_dir = {});

struct SweepPoint {
  std::string label;  // e.g. "alpha=0.5_gamma=0.9"
  std::vector<std::pair<std::string, std::string>> overrides;  // "section.key" -> value
  harness::ExperimentConfig config;
};

// Cartesian product over the [sweep] section's value lists, in key order with
// the last key varying fastest. A document without [sweep] yields one point.
std::vector<SweepPoint> expand_sweep(const IniDocument& doc, const std::filesystem::path& base_dir = {});

// Human-readable listing of the effective configuration.
std::string describe(const harness::ExperimentConfig& cfg);

}  // namespace releta::config
