#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "xrprobe/detection.hpp"

namespace xrprobe {

// JSON-lines detection logs: one object per line with keys media, device,
// emission_ts, playout_ts, slot and, for audio, frequency and confidence.

std::string to_json_line(const DetectionRecord& record);

// Throws ParseError carrying `line` on malformed input.
DetectionRecord parse_json_line(const std::string& text, std::size_t line);

void write_log(const std::vector<DetectionRecord>& records,
               const std::filesystem::path& path);

std::vector<DetectionRecord> read_log(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const Diagnostics& diagnostics);
Diagnostics diagnostics_from_json(const nlohmann::json& j);

}  // namespace xrprobe
