#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xrprobe/detection.hpp"
#include "xrprobe/timestamp.hpp"

namespace xrprobe {

struct LatencySample {
  std::string device;
  Media media = Media::kVideo;
  Timestamp t;  // playout
  double latency_ms = 0.0;
  int slot = 0;
};

struct LatencySeries {
  std::vector<LatencySample> samples;
  // Records whose playout precedes their emission.
  std::size_t clock_skew_suspected = 0;
};

LatencySeries latencies_from_log(const std::vector<DetectionRecord>& records);

struct SlotStat {
  int slot = 0;
  Media media = Media::kVideo;
  double mean_ms = 0.0;
  double std_ms = 0.0;  // population
  std::size_t n = 0;
};

// Grouped by (slot, media), ascending. Two-pass mean/std in sample order.
std::vector<SlotStat> slot_stats(const std::vector<LatencySample>& samples);

enum class EpochReduce { kMin, kMean };

// epoch index = floor(playout_ms / width).
using EpochKey = std::pair<std::int64_t, std::string>;
using EpochLatencies = std::map<EpochKey, double>;

std::int64_t epoch_of(Timestamp t, double epoch_width_ms);

// Per (epoch, device) latency of the samples of `media` (all samples when
// media is nullopt).
EpochLatencies epoch_device_latency(const std::vector<LatencySample>& samples,
                                    double epoch_width_ms, std::optional<Media> media,
                                    EpochReduce reduce = EpochReduce::kMin);

struct AsynchronyReport {
  Media media = Media::kVideo;
  std::vector<std::pair<std::int64_t, double>> series;  // (epoch, A(e))
  double max_ms = 0.0;
  double mean_ms = 0.0;
  double epoch_width_ms = 1000.0;
};

// A(e) = mean_i (L_i - min_j L_j); max and mean over epochs. An empty input
// gives an empty series with zero aggregates.
AsynchronyReport inter_device_asynchrony(const EpochLatencies& latencies,
                                         Media media = Media::kVideo,
                                         double epoch_width_ms = 1000.0);

struct SkewSample {
  std::string device;
  std::int64_t epoch = 0;
  double skew_ms = 0.0;  // video minus audio
};

// Ordered by epoch then device.
std::vector<SkewSample> intra_media_skew(const std::vector<LatencySample>& video,
                                         const std::vector<LatencySample>& audio,
                                         double epoch_width_ms,
                                         EpochReduce reduce = EpochReduce::kMin);

enum class LipSync { kUnnoticeable, kTolerable, kUnacceptable };

const char* to_string(LipSync level);

// < 80 unnoticeable, [80, 160] tolerable, > 160 unacceptable.
LipSync classify_lip_sync(double abs_skew_ms);

struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  // Most extreme data within 1.5 IQR of the quartiles.
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;  // ascending
};

// Type-7 quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);

// Throws std::invalid_argument on an empty series.
BoxStats boxplot_stats(std::vector<double> series);

}  // namespace xrprobe
