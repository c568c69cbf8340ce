#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sccdr/centrality.hpp"
#include "sccdr/synthdata.hpp"
#include "sccdr/trainer.hpp"

namespace sccdr {

// Every tunable of the pipeline as one flat set of `key = value` lines.
struct RunConfig {
  SynthConfig synth;
  KatzConfig katz;
  // Clamp alpha to 0.9 / lambda_max when the configured value would make
  // the power iteration diverge on the loaded graph.
  bool katz_alpha_auto = true;
  TrainConfig train;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::string default_value;
};

// All keys with their defaults, in file order.
const std::vector<ConfigKey>& config_keys();

// Applies one key; throws ConfigError for unknown keys or bad values.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_key(const RunConfig& cfg, const std::string& key);

// Reads `key = value` lines ('#' comments, blank lines ignored) on top of cfg.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

// The effective config, one line per key.
std::string render_config(const RunConfig& cfg);
void write_effective_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace sccdr
