#pragma once

#include <compare>
#include <cstdint>

namespace xrprobe {

// Milliseconds since the Unix epoch, as read from some node's clock.
struct Timestamp {
  std::int64_t ms = 0;

  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

constexpr std::int64_t operator-(Timestamp a, Timestamp b) { return a.ms - b.ms; }

enum class Media { kVideo, kAudio };

constexpr const char* to_string(Media m) {
  return m == Media::kVideo ? "video" : "audio";
}

}  // namespace xrprobe
