#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xrprobe/timestamp.hpp"

namespace xrprobe {

// One beacon observation at a device, as written to detection logs.
struct DetectionRecord {
  Media media = Media::kVideo;
  std::string device;
  Timestamp emission_ts;
  Timestamp playout_ts;
  // Number of connected users when the beacon played out.
  int slot = 0;
  std::optional<double> frequency_hz;
  std::optional<double> confidence;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct Diagnostics {
  std::size_t crc_failures = 0;
  std::size_t finder_misses = 0;
  std::size_t unknown_tones = 0;
  std::size_t ambiguous_tones = 0;
  std::size_t lost_frames = 0;
  std::size_t lost_pulses = 0;

  Diagnostics& operator+=(const Diagnostics& other);
  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

struct DetectionLog {
  std::vector<DetectionRecord> records;
  Diagnostics diagnostics;
};

// Orders by playout, then device, media, emission.
void sort_records(std::vector<DetectionRecord>& records);

}  // namespace xrprobe
