#include "xrprobe/detection.hpp"

#include <algorithm>
#include <tuple>

namespace xrprobe {

Diagnostics& Diagnostics::operator+=(const Diagnostics& other) {
  crc_failures += other.crc_failures;
  finder_misses += other.finder_misses;
  unknown_tones += other.unknown_tones;
  ambiguous_tones += other.ambiguous_tones;
  lost_frames += other.lost_frames;
  lost_pulses += other.lost_pulses;
  return *this;
}

void sort_records(std::vector<DetectionRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.playout_ts, a.device, a.media, a.emission_ts) <
           std::tie(b.playout_ts, b.device, b.media, b.emission_ts);
  });
}

}  // namespace xrprobe
