#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oimfb/experiment.hpp"

namespace oimfb {

struct ConfigIssue {
  std::string path;  // dotted key path, e.g. policy.imfb.q
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

// Environment variable that overrides the default output_dir.
inline constexpr const char* kOutputDirEnv = "OIMFB_OUTPUT_DIR";

ExperimentConfig default_config();

// Fully resolved document: every key present, enums as strings.
nlohmann::json config_to_json(const ExperimentConfig& config);

// Overlays `doc` on the defaults. Unknown keys, wrong types and semantic
// violations are all collected and thrown together as ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);

// Applies "a.b.c=value" to `doc`. The path must name a known leaf. The value
// is read as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Semantic checks only; empty when valid.
std::vector<ConfigIssue> validate_config(const ExperimentConfig& config);

// Reads a config file, applies overrides, resolves. Throws ConfigError
// (including for a missing or unparsable file).
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

// JSON Schema (draft 2020-12) describing the config document.
nlohmann::json config_schema();

}  // namespace oimfb
