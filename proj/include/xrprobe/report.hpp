#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "xrprobe/detection.hpp"
#include "xrprobe/metrics.hpp"

namespace xrprobe {

struct AnalysisOptions {
  double epoch_ms = 1000.0;
  EpochReduce reduce = EpochReduce::kMin;
  // Inter-device asynchrony target; two frames at 30 fps by default.
  double sync_target_ms = 2000.0 / 30.0;
};

struct MediaSummary {
  std::size_t n = 0;
  double mean_ms = 0.0;
};

struct DeviceSummary {
  std::string device;
  Media media = Media::kVideo;
  double min_ms = 0.0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
  std::size_t n = 0;
};

struct SkewSummary {
  std::vector<SkewSample> samples;
  std::map<std::string, BoxStats> per_device;  // signed skew
  std::optional<BoxStats> signed_all;
  std::optional<BoxStats> abs_all;
  std::map<LipSync, std::size_t> classes;  // of |skew|
};

struct AnalysisReport {
  AnalysisOptions options;
  std::size_t records = 0;
  std::size_t clock_skew_suspected = 0;
  Diagnostics diagnostics;
  std::map<Media, MediaSummary> media;
  std::vector<SlotStat> slots;
  std::vector<DeviceSummary> devices;
  EpochLatencies video_epochs;
  EpochLatencies audio_epochs;
  AsynchronyReport video_asynchrony;
  AsynchronyReport audio_asynchrony;
  SkewSummary skew;
};

AnalysisReport analyze(const DetectionLog& log, const AnalysisOptions& options = {});

nlohmann::ordered_json to_json(const AnalysisReport& report);

// report.json, latency_epochs.csv, asynchrony.csv, slot_stats.csv,
// devices.csv and skew.csv.
void write_report(const AnalysisReport& report, const std::filesystem::path& dir);

// Shortest round-trip decimal form, without exponent notation.
std::string format_number(double value);

}  // namespace xrprobe
