#include "xrprobe/log_io.hpp"

#include <fstream>

#include "xrprobe/error.hpp"

namespace xrprobe {

std::string to_json_line(const DetectionRecord& record) {
  nlohmann::ordered_json j;
  j["media"] = to_string(record.media);
  j["device"] = record.device;
  j["emission_ts"] = record.emission_ts.ms;
  j["playout_ts"] = record.playout_ts.ms;
  j["slot"] = record.slot;
  if (record.frequency_hz) j["frequency"] = *record.frequency_hz;
  if (record.confidence) j["confidence"] = *record.confidence;
  return j.dump();
}

DetectionRecord parse_json_line(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, e.what());
  }
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  DetectionRecord record;
  try {
    const auto media = j.at("media").get<std::string>();
    if (media == "video") {
      record.media = Media::kVideo;
    } else if (media == "audio") {
      record.media = Media::kAudio;
    } else {
      throw ParseError(line, "unknown media '" + media + "'");
    }
    record.device = j.at("device").get<std::string>();
    record.emission_ts = Timestamp{j.at("emission_ts").get<std::int64_t>()};
    record.playout_ts = Timestamp{j.at("playout_ts").get<std::int64_t>()};
    record.slot = j.at("slot").get<int>();
    if (j.contains("frequency")) record.frequency_hz = j["frequency"].get<double>();
    if (j.contains("confidence")) record.confidence = j["confidence"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, e.what());
  }
  return record;
}

void write_log(const std::vector<DetectionRecord>& records,
               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& record : records) out << to_json_line(record) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<DetectionRecord> read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<DetectionRecord> records;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_json_line(text, line));
  }
  return records;
}

nlohmann::ordered_json to_json(const Diagnostics& d) {
  return {{"crc_failures", d.crc_failures},     {"finder_misses", d.finder_misses},
          {"unknown_tones", d.unknown_tones},   {"ambiguous_tones", d.ambiguous_tones},
          {"lost_frames", d.lost_frames},       {"lost_pulses", d.lost_pulses}};
}

Diagnostics diagnostics_from_json(const nlohmann::json& j) {
  Diagnostics d;
  d.crc_failures = j.value("crc_failures", std::size_t{0});
  d.finder_misses = j.value("finder_misses", std::size_t{0});
  d.unknown_tones = j.value("unknown_tones", std::size_t{0});
  d.ambiguous_tones = j.value("ambiguous_tones", std::size_t{0});
  d.lost_frames = j.value("lost_frames", std::size_t{0});
  d.lost_pulses = j.value("lost_pulses", std::size_t{0});
  return d;
}

}  // namespace xrprobe
