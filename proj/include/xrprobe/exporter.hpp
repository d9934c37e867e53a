#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xrprobe/detection.hpp"
#include "xrprobe/quality.hpp"

namespace xrprobe {

struct MetricsSnapshot {
  // Latest value per device.
  std::map<std::string, double> m2p_ms;
  std::map<std::string, double> m2e_ms;
  std::map<std::string, double> skew_ms;
  // Detections per (media, slot).
  std::map<std::pair<Media, int>, std::size_t> detections;
  Diagnostics diagnostics;
  std::size_t negative_latencies = 0;
  // Length of the log prefix the snapshot was built from.
  std::size_t records = 0;

  friend bool operator==(const MetricsSnapshot&, const MetricsSnapshot&) = default;
};

// Folds one record into the snapshot.
void apply_record(MetricsSnapshot& snapshot, const DetectionRecord& record);

MetricsSnapshot snapshot_from_log(const DetectionLog& log);

// One `name{label="value"} number` line per metric, sorted. Counters that
// are zero are left out, so an empty snapshot renders as an empty body.
std::string render_exposition(const MetricsSnapshot& snapshot);

// Single writer, many readers; snapshot() always returns a state built
// from a prefix of the ingested records.
class MetricsRegistry {
 public:
  void ingest(const DetectionRecord& record);
  void add_diagnostics(const Diagnostics& diagnostics);
  MetricsSnapshot snapshot() const;

 private:
  mutable std::mutex mutex_;
  MetricsSnapshot state_;
};

// Quality policy and current level, adjustable through POST /config.
class ControlState {
 public:
  explicit ControlState(QualityPolicy policy = {}, std::size_t level = 0);

  // Applies {"level": name} and/or {"step_down_threshold_ms",
  // "step_up_threshold_ms", "dwell_s"}. Throws ConfigError and leaves the
  // state untouched when the result would be invalid.
  nlohmann::ordered_json apply(const nlohmann::json& request);
  nlohmann::ordered_json to_json() const;

  QualityPolicy policy() const;
  std::size_t level() const;

 private:
  mutable std::mutex mutex_;
  QualityPolicy policy_;
  std::size_t level_;
};

// GET /metrics and POST /config on a local TCP port.
class MetricsServer {
 public:
  MetricsServer(const MetricsRegistry& registry, ControlState& control);
  ~MetricsServer();
  MetricsServer(const MetricsServer&) = delete;
  MetricsServer& operator=(const MetricsServer&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port.
  // Throws IoError when the address cannot be bound.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace xrprobe
