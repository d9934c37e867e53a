#include "xrprobe/exporter.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "xrprobe/error.hpp"
#include "xrprobe/report.hpp"

namespace xrprobe {

void apply_record(MetricsSnapshot& s, const DetectionRecord& record) {
  ++s.records;
  const std::int64_t latency = record.playout_ts.ms - record.emission_ts.ms;
  if (latency < 0) {
    ++s.negative_latencies;
    return;
  }
  ++s.detections[{record.media, record.slot}];
  auto& gauge = record.media == Media::kVideo ? s.m2p_ms : s.m2e_ms;
  gauge[record.device] = static_cast<double>(latency);
  auto v = s.m2p_ms.find(record.device);
  auto a = s.m2e_ms.find(record.device);
  if (v != s.m2p_ms.end() && a != s.m2e_ms.end()) s.skew_ms[record.device] = v->second - a->second;
}

MetricsSnapshot snapshot_from_log(const DetectionLog& log) {
  MetricsSnapshot s;
  for (const auto& record : log.records) apply_record(s, record);
  s.diagnostics = log.diagnostics;
  return s;
}

namespace {

std::string escape_label(const std::string& value) {
  std::string out;
  for (char c : value) {
    if (c == '\\' || c == '"') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

}  // namespace

std::string render_exposition(const MetricsSnapshot& s) {
  std::vector<std::string> lines;
  auto gauges = [&](const char* name, const std::map<std::string, double>& values) {
    for (const auto& [device, value] : values) {
      lines.push_back(std::string(name) + "{device=\"" + escape_label(device) + "\"} " +
                      format_number(value));
    }
  };
  gauges("xr_m2p_latency_ms", s.m2p_ms);
  gauges("xr_m2e_latency_ms", s.m2e_ms);
  gauges("xr_intra_media_skew_ms", s.skew_ms);
  for (const auto& [key, count] : s.detections) {
    lines.push_back(std::string("xr_detections_total{media=\"") + to_string(key.first) +
                    "\",slot=\"" + std::to_string(key.second) + "\"} " + std::to_string(count));
  }
  auto counter = [&](const char* name, std::size_t value) {
    if (value > 0) lines.push_back(std::string(name) + " " + std::to_string(value));
  };
  const Diagnostics& d = s.diagnostics;
  counter("xr_crc_failures_total", d.crc_failures);
  counter("xr_finder_misses_total", d.finder_misses);
  counter("xr_unknown_tones_total", d.unknown_tones);
  counter("xr_ambiguous_tones_total", d.ambiguous_tones);
  counter("xr_lost_frames_total", d.lost_frames);
  counter("xr_lost_pulses_total", d.lost_pulses);
  counter("xr_negative_latencies_total", s.negative_latencies);
  std::sort(lines.begin(), lines.end());
  std::string body;
  for (const auto& line : lines) {
    body += line;
    body += '\n';
  }
  return body;
}

void MetricsRegistry::ingest(const DetectionRecord& record) {
  std::lock_guard lock(mutex_);
  apply_record(state_, record);
}

void MetricsRegistry::add_diagnostics(const Diagnostics& diagnostics) {
  std::lock_guard lock(mutex_);
  state_.diagnostics += diagnostics;
}

MetricsSnapshot MetricsRegistry::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_;
}

ControlState::ControlState(QualityPolicy policy, std::size_t level)
    : policy_(std::move(policy)), level_(level) {
  policy_.validate();
  if (level_ >= policy_.levels.size()) throw ConfigError("initial level out of range");
}

nlohmann::ordered_json ControlState::apply(const nlohmann::json& request) {
  if (!request.is_object()) throw ConfigError("config request must be a JSON object");
  std::lock_guard lock(mutex_);
  QualityPolicy policy = policy_;
  std::size_t level = level_;
  for (const auto& [key, value] : request.items()) {
    if (key == "level") {
      if (!value.is_string()) throw SchemaError("level", "expected a level name");
      auto it = std::find(policy.levels.begin(), policy.levels.end(), value.get<std::string>());
      if (it == policy.levels.end()) throw SchemaError("level", "not one of the levels");
      level = static_cast<std::size_t>(it - policy.levels.begin());
      continue;
    }
    double* target = key == "step_down_threshold_ms" ? &policy.step_down_threshold_ms
                     : key == "step_up_threshold_ms" ? &policy.step_up_threshold_ms
                     : key == "dwell_s"              ? &policy.dwell_s
                                                     : nullptr;
    if (!target) throw SchemaError(key, "unknown key");
    if (!value.is_number()) throw SchemaError(key, "expected a number");
    *target = value.get<double>();
  }
  policy.validate();
  policy_ = std::move(policy);
  level_ = level;
  nlohmann::ordered_json j;
  j["level"] = policy_.levels[level_];
  j["levels"] = policy_.levels;
  j["step_down_threshold_ms"] = policy_.step_down_threshold_ms;
  j["step_up_threshold_ms"] = policy_.step_up_threshold_ms;
  j["dwell_s"] = policy_.dwell_s;
  return j;
}

nlohmann::ordered_json ControlState::to_json() const {
  std::lock_guard lock(mutex_);
  nlohmann::ordered_json j;
  j["level"] = policy_.levels[level_];
  j["levels"] = policy_.levels;
  j["step_down_threshold_ms"] = policy_.step_down_threshold_ms;
  j["step_up_threshold_ms"] = policy_.step_up_threshold_ms;
  j["dwell_s"] = policy_.dwell_s;
  return j;
}

QualityPolicy ControlState::policy() const {
  std::lock_guard lock(mutex_);
  return policy_;
}

std::size_t ControlState::level() const {
  std::lock_guard lock(mutex_);
  return level_;
}

struct MetricsServer::Impl {
  httplib::Server server;
  std::thread thread;
};

MetricsServer::MetricsServer(const MetricsRegistry& registry, ControlState& control)
    : impl_(std::make_unique<Impl>()) {
  impl_->server.Get("/metrics", [&registry](const httplib::Request&, httplib::Response& res) {
    res.set_content(render_exposition(registry.snapshot()), "text/plain; version=0.0.4");
  });
  impl_->server.Post("/config", [&control](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto request = nlohmann::json::parse(req.body);
      res.set_content(control.apply(request).dump(), "application/json");
    } catch (const nlohmann::json::parse_error& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    } catch (const ConfigError& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

MetricsServer::~MetricsServer() { stop(); }

int MetricsServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void MetricsServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw IoError("cannot serve on " + host + ":" + std::to_string(port));
  }
}

void MetricsServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace xrprobe
