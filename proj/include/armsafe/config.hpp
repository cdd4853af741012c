#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "armsafe/scenario.hpp"

namespace armsafe {

/// One documented scenario key, addressed by its dotted path.
struct ConfigKey {
  std::string key;
  std::string type;  // number, vec3, mat3, bool, string or a choice list
  std::string help;
};

/// Every key a scenario document or an override may set, in document order.
const std::vector<ConfigKey>& config_keys();
bool is_config_key(std::string_view key);

/// Parse `value` (YAML flow syntax: 0.5, [1, 2, 3], true, rcbf_eso) and
/// store it under `key`. Vector keys accept a scalar, broadcast to all
/// joints. Throws ConfigError for unknown keys or ill-typed values.
void set_config_value(Scenario& scn, std::string_view key, std::string_view value);

/// The current value of `key` in YAML flow syntax; empty when the key is
/// inactive (for example safety.* without a safety specification).
std::string get_config_value(const Scenario& scn, std::string_view key);

/// Load a YAML (or JSON) scenario document. An optional top-level `base`
/// names a builtin scenario to start from; all other entries are nested
/// maps whose dotted paths are config keys.
Scenario scenario_from_document(std::string_view text);
/// A fully specified YAML document that loads back to the same scenario.
std::string scenario_to_document(const Scenario& scn);

/// What a CLI invocation asks for before any run starts.
struct RunConfig {
  std::string scenario;       // builtin name, used when document is empty
  std::string document_path;  // YAML/JSON scenario file
  std::string output_dir = ".";
  bool write_csv = true;
  bool write_json = true;
  bool plots = false;
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Base scenario plus overrides, validated. Every failure surfaces as
/// ConfigError, so bad input never reaches the simulator.
Scenario resolve_scenario(const RunConfig& cfg);

}  // namespace armsafe
