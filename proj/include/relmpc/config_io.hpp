#pragma once

// JSON (de)serialization of scenario configurations.

#include <string>

#include "relmpc/scenario.hpp"

namespace relmpc {

// Parses a JSON object; keys that are absent keep their defaults. Throws
// ConfigError on malformed text, unknown keys, wrong types or values that
// fail validation.
ScenarioConfig parse_scenario_config(const std::string& json_text);

// Reads the file at `path` and parses it. Throws ConfigError when the file
// cannot be read.
ScenarioConfig load_scenario_config(const std::string& path);

// Serializes every field of `config` as a pretty-printed JSON object that
// parse_scenario_config accepts back.
std::string scenario_config_to_json(const ScenarioConfig& config);

}  // namespace relmpc
