#include "xrprobe/video_beacon.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "xrprobe/crc16.hpp"

namespace xrprobe {
namespace {

constexpr int kFinderOrigins[3][2] = {{0, 0}, {0, kGridSize - kFinderSize},
                                      {kGridSize - kFinderSize, 0}};

// Distance between finder centers, in modules.
constexpr double kFinderSpan = kGridSize - kFinderSize;

void draw_finder(ModuleMatrix& m, int row0, int col0) {
  for (int r = 0; r < kFinderSize; ++r) {
    for (int c = 0; c < kFinderSize; ++c) {
      bool border = r == 0 || r == kFinderSize - 1 || c == 0 ||
                    c == kFinderSize - 1;
      bool core = r >= 2 && r <= 4 && c >= 2 && c <= 4;
      m(row0 + r, col0 + c) = border || core;
    }
  }
}

using DarkMask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>;

struct Run {
  bool dark;
  int start;
  int length;
};

template <typename Line>
std::vector<Run> runs_of(const Line& line) {
  std::vector<Run> runs;
  int n = static_cast<int>(line.size());
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || line(i) != line(start)) {
      runs.push_back({line(start), start, i - start});
      start = i;
    }
  }
  return runs;
}

bool finder_ratio(const std::array<int, 5>& len) {
  int total = len[0] + len[1] + len[2] + len[3] + len[4];
  if (total < kFinderSize) return false;
  double unit = total / 7.0;
  double tol = unit / 2.0;
  return std::abs(len[0] - unit) < tol && std::abs(len[1] - unit) < tol &&
         std::abs(len[2] - 3.0 * unit) < 3.0 * tol &&
         std::abs(len[3] - unit) < tol && std::abs(len[4] - unit) < tol;
}

// Vertical 1:1:3:1:1 check through (row, col). Returns the vertical center
// and the pattern height.
std::optional<std::pair<double, int>> cross_check_vertical(
    const DarkMask& dark, int row, int col) {
  const int height = static_cast<int>(dark.rows());
  if (!dark(row, col)) return std::nullopt;
  int top = row;
  while (top > 0 && dark(top - 1, col)) --top;
  int bottom = row + 1;
  while (bottom < height && dark(bottom, col)) ++bottom;

  auto extend = [&](int from, int step, bool want) {
    int len = 0;
    for (int r = from; r >= 0 && r < height && dark(r, col) == want;
         r += step) {
      ++len;
    }
    return len;
  };
  int light_up = extend(top - 1, -1, false);
  int dark_up = extend(top - 1 - light_up, -1, true);
  int light_down = extend(bottom, +1, false);
  int dark_down = extend(bottom + light_down, +1, true);
  std::array<int, 5> len = {dark_up, light_up, bottom - top, light_down,
                            dark_down};
  if (!finder_ratio(len)) return std::nullopt;
  return std::make_pair((top + bottom) / 2.0,
                        len[0] + len[1] + len[2] + len[3] + len[4]);
}

struct FinderCandidate {
  double cx;
  double cy;
  double module;
  int count;
};

std::vector<FinderCandidate> find_finders(const DarkMask& dark) {
  std::vector<FinderCandidate> found;
  for (int y = 0; y < dark.rows(); ++y) {
    std::vector<Run> runs = runs_of(dark.row(y));
    for (std::size_t i = 0; i + 4 < runs.size(); ++i) {
      if (!runs[i].dark) continue;
      std::array<int, 5> len = {runs[i].length, runs[i + 1].length,
                                runs[i + 2].length, runs[i + 3].length,
                                runs[i + 4].length};
      if (!finder_ratio(len)) continue;
      double cx = runs[i + 2].start + runs[i + 2].length / 2.0;
      int width = len[0] + len[1] + len[2] + len[3] + len[4];
      auto vertical =
          cross_check_vertical(dark, y, static_cast<int>(std::floor(cx)));
      if (!vertical) continue;
      auto [cy, height] = *vertical;
      if (std::abs(height - width) > 0.4 * width) continue;
      double module = (width + height) / 14.0;

      auto near = std::find_if(found.begin(), found.end(), [&](const auto& f) {
        return std::abs(f.cx - cx) <= f.module &&
               std::abs(f.cy - cy) <= f.module;
      });
      if (near == found.end()) {
        found.push_back({cx, cy, module, 1});
      } else {
        double n = near->count;
        near->cx = (near->cx * n + cx) / (n + 1);
        near->cy = (near->cy * n + cy) / (n + 1);
        near->module = (near->module * n + module) / (n + 1);
        near->count += 1;
      }
    }
  }
  return found;
}

struct FinderTriple {
  FinderCandidate top_left;
  double module;
  int score;
};

std::vector<FinderTriple> arrange_triples(
    const std::vector<FinderCandidate>& finders) {
  std::vector<FinderTriple> triples;
  for (const auto& tl : finders) {
    for (const auto& tr : finders) {
      if (tr.cx <= tl.cx) continue;
      for (const auto& bl : finders) {
        if (bl.cy <= tl.cy) continue;
        double m = (tl.module + tr.module + bl.module) / 3.0;
        if (std::abs(tr.cy - tl.cy) > m || std::abs(bl.cx - tl.cx) > m) {
          continue;
        }
        if (std::abs((tr.cx - tl.cx) / m - kFinderSpan) > 1.5 ||
            std::abs((bl.cy - tl.cy) / m - kFinderSpan) > 1.5) {
          continue;
        }
        triples.push_back({tl, m, tl.count + tr.count + bl.count});
      }
    }
  }
  std::stable_sort(triples.begin(), triples.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  return triples;
}

ModuleMatrix sample_modules(const DarkMask& dark, const FinderTriple& t) {
  const double half = kFinderSize / 2.0;
  double x0 = t.top_left.cx - half * t.module;
  double y0 = t.top_left.cy - half * t.module;
  ModuleMatrix modules;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      auto px = static_cast<Eigen::Index>(std::floor(x0 + (c + 0.5) * t.module));
      auto py = static_cast<Eigen::Index>(std::floor(y0 + (r + 0.5) * t.module));
      px = std::clamp<Eigen::Index>(px, 0, dark.cols() - 1);
      py = std::clamp<Eigen::Index>(py, 0, dark.rows() - 1);
      modules(r, c) = dark(py, px);
    }
  }
  return modules;
}

}  // namespace

bool is_function_module(int row, int col) {
  const int far = kGridSize - kFinderSize - 1;
  return (row <= kFinderSize && col <= kFinderSize) ||
         (row <= kFinderSize && col >= far) ||
         (row >= far && col <= kFinderSize);
}

const std::vector<std::pair<int, int>>& data_module_order() {
  static const std::vector<std::pair<int, int>> order = [] {
    std::vector<std::pair<int, int>> positions;
    for (int r = 0; r < kGridSize; ++r) {
      for (int c = 0; c < kGridSize; ++c) {
        if (!is_function_module(r, c)) positions.emplace_back(r, c);
      }
    }
    return positions;
  }();
  return order;
}

Payload make_payload(Timestamp ts) {
  Payload payload{};
  auto value = static_cast<std::uint64_t>(ts.ms);
  for (int i = 0; i < 8; ++i) {
    payload[i] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
  }
  std::uint16_t crc = crc16(std::span(payload.data(), 8));
  payload[8] = static_cast<std::uint8_t>(crc >> 8);
  payload[9] = static_cast<std::uint8_t>(crc & 0xFF);
  return payload;
}

ModuleGrid encode_beacon(Timestamp ts) {
  ModuleGrid grid{ModuleMatrix::Constant(false), ts};
  for (const auto& origin : kFinderOrigins) {
    draw_finder(grid.modules, origin[0], origin[1]);
  }
  Payload payload = make_payload(ts);
  const auto& order = data_module_order();
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto [r, c] = order[i];
    if (i < static_cast<std::size_t>(kPayloadBits)) {
      grid.modules(r, c) = (payload[i / 8] >> (7 - i % 8)) & 1;
    } else {
      grid.modules(r, c) = (r + c) % 2 == 0;
    }
  }
  return grid;
}

Payload extract_payload(const ModuleMatrix& modules) {
  Payload payload{};
  const auto& order = data_module_order();
  for (int i = 0; i < kPayloadBits; ++i) {
    auto [r, c] = order[i];
    if (modules(r, c)) payload[i / 8] |= static_cast<std::uint8_t>(1 << (7 - i % 8));
  }
  return payload;
}

bool payload_crc_ok(const Payload& payload) {
  std::uint16_t stored = static_cast<std::uint16_t>(payload[8] << 8 | payload[9]);
  return crc16(std::span(payload.data(), 8)) == stored;
}

Timestamp payload_timestamp(const Payload& payload) {
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i) value = value << 8 | payload[i];
  return Timestamp{static_cast<std::int64_t>(value)};
}

PixelBuffer rasterize(const ModuleGrid& grid, int scale, int quiet) {
  scale = std::max(scale, 1);
  quiet = std::max(quiet, 0);
  const int side = (kGridSize + 2 * quiet) * scale;
  PixelBuffer buffer = PixelBuffer::Constant(side, side, 255);
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      if (grid.modules(r, c)) {
        buffer.block((r + quiet) * scale, (c + quiet) * scale, scale, scale)
            .setZero();
      }
    }
  }
  return buffer;
}

void composite(PixelBuffer& frame, const PixelBuffer& patch, int x, int y) {
  Eigen::Index x0 = std::max(x, 0);
  Eigen::Index y0 = std::max(y, 0);
  Eigen::Index x1 = std::min<Eigen::Index>(frame.cols(), x + patch.cols());
  Eigen::Index y1 = std::min<Eigen::Index>(frame.rows(), y + patch.rows());
  if (x1 <= x0 || y1 <= y0) return;
  frame.block(y0, x0, y1 - y0, x1 - x0) =
      patch.block(y0 - y, x0 - x, y1 - y0, x1 - x0);
}

Timestamp beacon_at(Timestamp stream_start, double local_ms, int interval_ms) {
  double elapsed = local_ms - static_cast<double>(stream_start.ms);
  auto steps = static_cast<std::int64_t>(std::floor(elapsed / interval_ms));
  return Timestamp{stream_start.ms + steps * interval_ms};
}

const char* to_string(DecodeError error) {
  switch (error) {
    case DecodeError::kFinderNotFound:
      return "FinderNotFound";
    case DecodeError::kCrcMismatch:
      return "CrcMismatch";
  }
  return "unknown";
}

DecodeResult detect_decode(const PixelBuffer& frame, Timestamp playout_ts,
                           std::string_view device_id) {
  if (frame.size() == 0) return DecodeError::kFinderNotFound;
  const int lo = frame.minCoeff();
  const int hi = frame.maxCoeff();
  // Anything flatter than this cannot carry a bimodal code.
  if (hi - lo < 16) return DecodeError::kFinderNotFound;
  const double threshold = (lo + hi) / 2.0;
  DarkMask dark = frame.unaryExpr([threshold](std::uint8_t p) {
    return static_cast<double>(p) < threshold;
  });

  std::vector<FinderTriple> triples = arrange_triples(find_finders(dark));
  if (triples.empty()) return DecodeError::kFinderNotFound;
  for (const auto& triple : triples) {
    Payload payload = extract_payload(sample_modules(dark, triple));
    if (payload_crc_ok(payload)) {
      return VideoDetection{std::string(device_id), payload_timestamp(payload),
                            playout_ts};
    }
  }
  return DecodeError::kCrcMismatch;
}

}  // namespace xrprobe
