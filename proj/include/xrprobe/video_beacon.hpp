#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "xrprobe/timestamp.hpp"

namespace xrprobe {

inline constexpr int kGridSize = 21;
inline constexpr int kFinderSize = 7;
inline constexpr int kPayloadBytes = 10;  // 8 timestamp + 2 CRC
inline constexpr int kPayloadBits = kPayloadBytes * 8;
inline constexpr int kBeaconIntervalMs = 10;

// true = dark module.
using ModuleMatrix =
    Eigen::Matrix<bool, kGridSize, kGridSize, Eigen::RowMajor>;

// 8-bit grayscale, row-major; rows() is the height, cols() the width.
using PixelBuffer = Eigen::Matrix<std::uint8_t, Eigen::Dynamic,
                                  Eigen::Dynamic, Eigen::RowMajor>;

struct ModuleGrid {
  ModuleMatrix modules;
  Timestamp payload_ts;
};

using Payload = std::array<std::uint8_t, kPayloadBytes>;

// Finder patterns plus their one-module separators.
bool is_function_module(int row, int col);

// Row-major positions of every data module (249 of them).
const std::vector<std::pair<int, int>>& data_module_order();

// Big-endian timestamp followed by the big-endian CRC of those 8 bytes.
Payload make_payload(Timestamp ts);

ModuleGrid encode_beacon(Timestamp ts);

// First kPayloadBits data modules, packed MSB first.
Payload extract_payload(const ModuleMatrix& modules);

bool payload_crc_ok(const Payload& payload);

Timestamp payload_timestamp(const Payload& payload);

// Square buffer of side (21 + 2 * quiet) * scale; dark = 0, light = 255.
PixelBuffer rasterize(const ModuleGrid& grid, int scale, int quiet);

// Copies `patch` into `frame` with its top-left corner at (x, y), clipped.
void composite(PixelBuffer& frame, const PixelBuffer& patch, int x, int y);

// Most recent beacon value at `local_ms` for a stream that started at
// `stream_start`: beacons advance every `interval_ms` of the capture clock.
Timestamp beacon_at(Timestamp stream_start, double local_ms,
                    int interval_ms = kBeaconIntervalMs);

struct VideoDetection {
  std::string device_id;
  Timestamp emission_ts;
  Timestamp playout_ts;
};

enum class DecodeError { kFinderNotFound, kCrcMismatch };

const char* to_string(DecodeError error);

using DecodeResult = std::variant<VideoDetection, DecodeError>;

// Locates the three finder patterns with a 1:1:3:1:1 run-length scan,
// samples every module center and checks the CRC. Axis-aligned only.
DecodeResult detect_decode(const PixelBuffer& frame, Timestamp playout_ts,
                           std::string_view device_id = {});

}  // namespace xrprobe
