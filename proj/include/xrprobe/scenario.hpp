#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "xrprobe/netsim.hpp"

namespace xrprobe {

// Scenario files are JSON objects; only "profiles" is required. See the
// README for the key reference. Unknown keys are rejected.
SessionScenario parse_scenario(const nlohmann::json& j);

// Throws IoError when the file cannot be read, SchemaError on bad content.
SessionScenario load_scenario(const std::filesystem::path& path);

// Fully resolved form; parse_scenario(scenario_to_json(s)) reproduces s.
nlohmann::ordered_json scenario_to_json(const SessionScenario& scenario);

}  // namespace xrprobe
