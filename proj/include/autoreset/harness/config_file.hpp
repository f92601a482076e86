#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "autoreset/train/run_config.hpp"

namespace autoreset::harness {

/// Thrown for unknown keys, malformed values and out-of-range values; the
/// message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Config files are plain text, one `key = value` per line; `#` starts a
/// comment. Lists (hidden_dims) are comma separated. Booleans are
/// true/false. Keys not present keep their defaults.
train::RunConfig parse_config(const std::string& text);
train::RunConfig load_config(const std::filesystem::path& path);

/// Apply one `key=value` override on top of an existing config. On error the
/// config is left unchanged.
void apply_override(train::RunConfig& config, const std::string& assignment);

/// Every key with its resolved value, in a stable order. Thresholds left on
/// `auto` are written out as the value they resolve to, so parsing the
/// result gives a config that behaves identically.
std::string format_config(const train::RunConfig& config);
std::vector<std::pair<std::string, std::string>> config_entries(const train::RunConfig& config);

/// Names of all accepted keys.
const std::vector<std::string>& config_keys();

}  // namespace autoreset::harness
