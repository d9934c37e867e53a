#include "xrprobe/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <tuple>

#include "xrprobe/clock.hpp"
#include "xrprobe/error.hpp"
#include "xrprobe/video_beacon.hpp"

namespace xrprobe {

std::optional<NetworkProfile> builtin_profile(std::string_view name) {
  // Calibrated against the testbed's reported means; see README.
  if (name == "ethernet") {
    return NetworkProfile{"ethernet", 75.0,
                          {JitterKind::kLognormal, 0.0, std::log(3.0), 0.5},
                          std::nullopt, 0.0};
  }
  if (name == "fiveg") {
    return NetworkProfile{"fiveg", 112.0,
                          {JitterKind::kLognormal, 0.0, std::log(8.0), 0.6},
                          std::nullopt, 0.001};
  }
  if (name == "wifi") {
    OutageModel outage{1.0 / 400.0, 200.0, 1500.0, OutageScope::kCell, 0.5, false};
    return NetworkProfile{"wifi", 113.0,
                          {JitterKind::kLognormal, 0.0, std::log(10.0), 0.8},
                          outage, 0.005};
  }
  return std::nullopt;
}

double jitter_draw(const JitterModel& jitter, Rng& rng) {
  switch (jitter.kind) {
    case JitterKind::kGaussian:
      return jitter.sigma_ms > 0.0 ? std::abs(rng.normal(0.0, jitter.sigma_ms)) : 0.0;
    case JitterKind::kLognormal:
      return rng.lognormal(jitter.mu, jitter.sigma);
  }
  return 0.0;
}

double sample_hop_delay(const NetworkProfile& profile, Rng& rng, double t_ms,
                        BurstState& state) {
  double delay = profile.base_one_way_ms + jitter_draw(profile.jitter, rng);
  if (profile.outage) {
    const OutageModel& outage = *profile.outage;
    if (outage.scope == OutageScope::kLink && !state.in_outage(t_ms) &&
        rng.bernoulli(outage.enter_prob)) {
      state.outage_end_ms = t_ms + rng.uniform(outage.min_ms, outage.max_ms);
    }
    if (state.in_outage(t_ms)) delay += state.outage_end_ms - t_ms;
  }
  return delay;
}

double sample_passive_delay(const NetworkProfile& profile, Rng& rng, double t_ms,
                            const BurstState& state, bool include_outage) {
  double delay = profile.base_one_way_ms + jitter_draw(profile.jitter, rng);
  if (include_outage && state.in_outage(t_ms)) delay += state.outage_end_ms - t_ms;
  return delay;
}

int SessionScenario::connected_at(double true_ms) const {
  int count = 0;
  for (const auto& node : nodes) {
    if (static_cast<double>(start_ts.ms) + node.join_s * 1000.0 <= true_ms) ++count;
  }
  return count;
}

namespace {

void validate_profile(const NetworkProfile& p, const std::string& where) {
  if (p.base_one_way_ms < 0.0) throw SchemaError(where + ".base_one_way_ms", "must be >= 0");
  if (p.loss_prob < 0.0 || p.loss_prob >= 1.0) {
    throw SchemaError(where + ".loss_prob", "must be in [0, 1)");
  }
  if (p.jitter.kind == JitterKind::kGaussian && p.jitter.sigma_ms < 0.0) {
    throw SchemaError(where + ".jitter.sigma_ms", "must be >= 0");
  }
  if (p.jitter.kind == JitterKind::kLognormal && p.jitter.sigma < 0.0) {
    throw SchemaError(where + ".jitter.sigma", "must be >= 0");
  }
  if (p.outage) {
    const auto& o = *p.outage;
    if (o.enter_prob < 0.0 || o.enter_prob > 1.0) {
      throw SchemaError(where + ".outage.enter_prob", "must be in [0, 1]");
    }
    if (o.hit_prob < 0.0 || o.hit_prob > 1.0) {
      throw SchemaError(where + ".outage.hit_prob", "must be in [0, 1]");
    }
    if (o.min_ms < 0.0 || o.max_ms < o.min_ms) {
      throw SchemaError(where + ".outage", "duration range must satisfy 0 <= min_ms <= max_ms");
    }
  }
}

}  // namespace

void SessionScenario::validate() const {
  if (!(duration_s > 0.0)) throw SchemaError("duration_s", "must be positive");
  if (fps < 1 || fps > 1000) throw SchemaError("fps", "must be in [1, 1000]");
  if (beacon_interval_ms < 1) throw SchemaError("beacon_interval_ms", "must be >= 1");
  if (nodes.empty()) throw ConfigError("scenario has no presenter");
  if (nodes.front().join_s != 0.0) throw SchemaError("joins_s", "presenter must join at 0 s");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i].join_s > nodes[i - 1].join_s)) {
      throw SchemaError("joins_s", "join times strictly increasing");
    }
  }
  if (nodes.back().join_s >= duration_s) {
    throw SchemaError("joins_s", "join times must fall before the end of the session");
  }
  std::set<std::string> ids;
  for (const auto& node : nodes) {
    if (!ids.insert(node.id).second) throw SchemaError("nodes", "duplicate node id " + node.id);
    validate_profile(node.profile, "profiles." + node.profile.name);
  }
  if (audio.tone_count < 1) throw SchemaError("audio.tones", "must be >= 1");
  if (!(audio.f0_hz > 0.0) || !(audio.delta_hz > 0.0)) {
    throw SchemaError("audio", "f0_hz and delta_hz must be positive");
  }
  if (audio.highest_tone() >= kDefaultSampleRate / 2.0) {
    throw SchemaError("audio", "highest tone must stay below half the sample rate");
  }
  if (audio.pulse_duration_ms < 1 || audio.pulse_duration_ms > audio.pulse_period_ms) {
    throw SchemaError("audio.pulse_duration_ms", "must be in [1, pulse_period_ms]");
  }
  if (audio.ramp_ms < 0 || 2 * audio.ramp_ms > audio.pulse_duration_ms) {
    throw SchemaError("audio.ramp_ms", "ramps must fit inside the pulse");
  }
  const auto& p = pipeline;
  if (p.encode_ms < 0 || p.render_ms < 0 || p.decode_ms < 0 || p.audio_buffer_ms < 0 ||
      p.catchup_ms_per_s < 0) {
    throw SchemaError("pipeline", "stage delays must be >= 0");
  }
  if (!(clocks.sync_interval_s > 0.0)) throw SchemaError("clocks.sync_interval_s", "must be positive");
  if (clocks.ntp_sigma_ms < 0.0) throw SchemaError("clocks.ntp_sigma_ms", "must be >= 0");
  if (quality.enabled) {
    if (quality.levels.empty()) throw SchemaError("quality.levels", "must not be empty");
    if (quality.initial_level >= quality.levels.size()) {
      throw SchemaError("quality.initial", "not one of the levels");
    }
    try {
      quality.policy.validate();
    } catch (const ConfigError& e) {
      throw SchemaError("quality", e.what());
    }
    if (!(quality.window_s > 0.0)) throw SchemaError("quality.window_s", "must be positive");
  }
}

SessionScenario default_scenario(const NetworkProfile& profile) {
  SessionScenario scenario;
  scenario.audio.epoch_ts = scenario.start_ts;
  scenario.nodes.push_back({"presenter", 0.0, profile, 0.0});
  const double joins[] = {60.0, 120.0, 180.0, 240.0};
  for (int i = 0; i < 4; ++i) {
    scenario.nodes.push_back({"v" + std::to_string(i + 1), joins[i], profile, 0.0});
  }
  return scenario;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Minimum silence the audio playout keeps between consecutive pulses.
constexpr double kPulseGuardMs = 10.0;

enum class EventKind { kJoin, kNtpSync, kCapture, kPulse, kVideoDisplay, kAudioDetect, kControl };

struct Event {
  double time;
  std::uint64_t seq;
  EventKind kind;
  std::size_t node;
  std::int64_t index;
};

struct LaterFirst {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
  }
};

// Video and audio draw from separate streams so that moving one medium's
// events in time never changes the other's delays.
struct Link {
  Rng video;
  Rng audio;
  BurstState burst;
};

struct NodeRuntime {
  VirtualClock clock;
  Rng clock_rng;
  Link downlink;
  double join_true = 0.0;
  double tick_phase = 0.0;
  double fifo_arrival = -kInf;
  double playout_target = 0.0;
  double last_capture = 0.0;
  bool has_target = false;
  std::int64_t last_tick_index = std::numeric_limits<std::int64_t>::min();
  std::optional<std::size_t> last_video;
  double last_onset = -kInf;
};

struct PendingVideo {
  std::size_t node;
  Timestamp beacon;
  double tick;
  bool cancelled = false;
};

struct PendingAudio {
  std::size_t node;
  std::int64_t slot;
  double onset;
};

class Engine {
 public:
  Engine(const SessionScenario& scenario, std::uint64_t seed, const AudioDetectGrid& grid)
      : sc_(scenario), grid_(grid), seed_(seed),
        start_(static_cast<double>(scenario.start_ts.ms)), end_(scenario.end_true_ms()),
        frame_ms_(scenario.frame_interval_ms()), uplink_{Rng(mix_seed(seed, 1)), Rng(mix_seed(seed, 3)), {}},
        cell_rng_(mix_seed(seed, 2)), last_change_(start_) {
    const auto& nodes = sc_.nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      NodeRuntime rt;
      rt.clock = VirtualClock{nodes[i].id, 0.0, nodes[i].drift_ppm, start_};
      rt.clock_rng = Rng(mix_seed(seed, 100 + i));
      rt.downlink = Link{Rng(mix_seed(seed, 200 + i)), Rng(mix_seed(seed, 400 + i)), {}};
      rt.clock = ntp_sync(rt.clock, sc_.clocks.ntp_sigma_ms, rt.clock_rng, start_);
      rt.clock.offset_ms += nodes[i].offset_ms;
      Rng phase_rng(mix_seed(seed, 300 + i));
      rt.tick_phase = phase_rng.uniform(0.0, frame_ms_);
      rt.join_true = start_ + nodes[i].join_s * 1000.0;
      runtime_.push_back(std::move(rt));

      NodeTrace trace;
      trace.device = nodes[i].id;
      trace.join_true_ms = rt_join(i);
      result_.traces.push_back(std::move(trace));
    }
    if (sc_.quality.enabled) level_ = sc_.quality.initial_level;
  }

  SimulationResult run() {
    for (std::size_t i = 0; i < runtime_.size(); ++i) {
      push(rt_join(i), EventKind::kJoin, i, 0);
      const double first_sync = start_ + sc_.clocks.sync_interval_s * 1000.0 + 1000.0 * i;
      if (first_sync < end_) push(first_sync, EventKind::kNtpSync, i, 0);
    }
    push(start_, EventKind::kCapture, 0, 0);
    push(pulse_time(0), EventKind::kPulse, 0, 0);
    if (sc_.quality.enabled) push(start_ + 1000.0, EventKind::kControl, 0, 1);

    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      switch (ev.kind) {
        case EventKind::kJoin: on_join(ev); break;
        case EventKind::kNtpSync: on_sync(ev); break;
        case EventKind::kCapture: on_capture(ev); break;
        case EventKind::kPulse: on_pulse(ev); break;
        case EventKind::kVideoDisplay: on_display(ev); break;
        case EventKind::kAudioDetect: on_audio(ev); break;
        case EventKind::kControl: on_control(ev); break;
      }
    }
    sort_records(result_.log.records);
    return std::move(result_);
  }

 private:
  double rt_join(std::size_t i) const { return start_ + sc_.nodes[i].join_s * 1000.0; }

  void push(double time, EventKind kind, std::size_t node, std::int64_t index) {
    queue_.push(Event{time, seq_++, kind, node, index});
  }

  const NetworkProfile& profile(std::size_t node) const { return sc_.nodes[node].profile; }

  double encode_ms() const {
    double delta = sc_.quality.enabled ? sc_.quality.levels[level_].encode_delta_ms : 0.0;
    return std::max(0.0, sc_.pipeline.encode_ms + delta);
  }

  double network_delta() const {
    return sc_.quality.enabled ? sc_.quality.levels[level_].network_delta_ms : 0.0;
  }

  double pulse_time(std::int64_t slot) const {
    const double local = static_cast<double>(sc_.audio.epoch_ts.ms) +
                         static_cast<double>(slot) * sc_.audio.pulse_period_ms;
    return true_time_at(runtime_[0].clock, local);
  }

  std::int64_t tick_index(const NodeRuntime& rt, double t) const {
    return static_cast<std::int64_t>(std::ceil((t - rt.tick_phase - start_) / frame_ms_ - 1e-9));
  }

  double tick_time(const NodeRuntime& rt, std::int64_t index) const {
    return start_ + rt.tick_phase + static_cast<double>(index) * frame_ms_;
  }

  void on_join(const Event& ev) {
    NodeRuntime& rt = runtime_[ev.node];
    NodeTrace& trace = result_.traces[ev.node];
    trace.join_local_ms = local_time(rt.clock, ev.time);
    trace.first_tick_true_ms = tick_time(rt, tick_index(rt, ev.time));
    trace.first_tick_local_ms = local_time(rt.clock, trace.first_tick_true_ms);
  }

  void on_sync(const Event& ev) {
    NodeRuntime& rt = runtime_[ev.node];
    rt.clock = ntp_sync(rt.clock, sc_.clocks.ntp_sigma_ms, rt.clock_rng, ev.time);
    rt.clock.offset_ms += sc_.nodes[ev.node].offset_ms;
    const double next = ev.time + sc_.clocks.sync_interval_s * 1000.0;
    if (next < end_) push(next, EventKind::kNtpSync, ev.node, 0);
  }

  // One trigger draw per cell-scoped profile per capture.
  void step_cells(double t) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < runtime_.size(); ++i) {
      const NetworkProfile& p = profile(i);
      if (!p.outage || p.outage->scope != OutageScope::kCell) continue;
      if (!seen.insert(p.name).second) continue;
      double& busy = cell_busy_[p.name];
      if (t < busy || !cell_rng_.bernoulli(p.outage->enter_prob)) continue;
      auto stall = [&](Link& link) {
        const bool hit = cell_rng_.bernoulli(p.outage->hit_prob);
        const double duration = cell_rng_.uniform(p.outage->min_ms, p.outage->max_ms);
        if (hit) {
          link.burst.outage_end_ms = std::max(link.burst.outage_end_ms, t + duration);
          busy = std::max(busy, t + duration);
        }
      };
      if (profile(0).name == p.name) stall(uplink_);
      for (std::size_t j = 0; j < runtime_.size(); ++j) {
        if (profile(j).name == p.name) stall(runtime_[j].downlink);
      }
    }
  }

  void on_capture(const Event& ev) {
    const double t = ev.time;
    const double next = start_ + static_cast<double>(ev.index + 1) * frame_ms_;
    if (next < end_) push(next, EventKind::kCapture, 0, ev.index + 1);
    step_cells(t);

    const Timestamp beacon =
        beacon_at(sc_.start_ts, local_time(runtime_[0].clock, t), sc_.beacon_interval_ms);
    const double encode = encode_ms();
    const double net_delta = network_delta();

    if (uplink_.video.bernoulli(profile(0).loss_prob)) {
      ++result_.log.diagnostics.lost_frames;
      return;
    }
    const double up = std::max(
        0.0, sample_hop_delay(profile(0), uplink_.video, t + encode, uplink_.burst) + net_delta);
    uplink_fifo_ = std::max(t + encode + up, uplink_fifo_);
    const double send = uplink_fifo_ + sc_.pipeline.render_ms + encode;

    for (std::size_t i = 0; i < runtime_.size(); ++i) {
      NodeRuntime& rt = runtime_[i];
      if (rt.join_true > t) continue;
      if (rt.downlink.video.bernoulli(profile(i).loss_prob)) {
        ++result_.log.diagnostics.lost_frames;
        continue;
      }
      const double down = std::max(
          0.0, sample_hop_delay(profile(i), rt.downlink.video, send, rt.downlink.burst) + net_delta);
      rt.fifo_arrival = std::max(send + down, rt.fifo_arrival);
      const double delay = rt.fifo_arrival + sc_.pipeline.decode_ms - t;

      double hold = delay;
      if (sc_.pipeline.jitter_buffer) {
        if (rt.has_target) {
          const double decayed =
              rt.playout_target - sc_.pipeline.catchup_ms_per_s * (t - rt.last_capture) / 1000.0;
          hold = std::max(delay, decayed);
        }
        rt.playout_target = hold;
        rt.has_target = true;
        rt.last_capture = t;
      }
      const std::int64_t index = tick_index(rt, t + hold);
      const double tick = tick_time(rt, index);
      if (tick >= end_) continue;
      if (index == rt.last_tick_index && rt.last_video) {
        pending_video_[*rt.last_video].cancelled = true;
      }
      rt.last_tick_index = index;
      rt.last_video = pending_video_.size();
      pending_video_.push_back({i, beacon, tick});
      push(tick, EventKind::kVideoDisplay, i, static_cast<std::int64_t>(*rt.last_video));
    }
  }

  void on_pulse(const Event& ev) {
    const double t = ev.time;
    const std::int64_t slot = ev.index;
    const double next = pulse_time(slot + 1);
    if (next < end_) push(next, EventKind::kPulse, 0, slot + 1);

    const double net_delta = network_delta();
    auto audio_outage = [](const NetworkProfile& p) {
      return p.outage && p.outage->affects_audio;
    };
    if (uplink_.audio.bernoulli(profile(0).loss_prob)) {
      ++result_.log.diagnostics.lost_pulses;
      return;
    }
    const double arrival =
        t + std::max(0.0, sample_passive_delay(profile(0), uplink_.audio, t, uplink_.burst,
                                               audio_outage(profile(0))) +
                              net_delta);
    for (std::size_t i = 0; i < runtime_.size(); ++i) {
      NodeRuntime& rt = runtime_[i];
      if (rt.join_true > t) continue;
      if (rt.downlink.audio.bernoulli(profile(i).loss_prob)) {
        ++result_.log.diagnostics.lost_pulses;
        continue;
      }
      const double down = std::max(
          0.0, sample_passive_delay(profile(i), rt.downlink.audio, arrival, rt.downlink.burst,
                                    audio_outage(profile(i))) +
                   net_delta);
      double onset = arrival + down + sc_.pipeline.audio_buffer_ms;
      onset = std::max(onset, rt.last_onset + sc_.audio.pulse_duration_ms + kPulseGuardMs);
      rt.last_onset = onset;
      const double hops = std::ceil((onset + grid_.onset_lead_ms - rt.join_true) / grid_.hop_ms);
      const double detect = rt.join_true + std::max(0.0, hops) * grid_.hop_ms;
      if (detect + grid_.window_ms > end_) continue;
      pending_audio_.push_back({i, slot, onset});
      push(detect, EventKind::kAudioDetect, i, static_cast<std::int64_t>(pending_audio_.size() - 1));
    }
  }

  void on_display(const Event& ev) {
    const PendingVideo& frame = pending_video_[static_cast<std::size_t>(ev.index)];
    if (frame.cancelled) return;
    const NodeRuntime& rt = runtime_[frame.node];
    DetectionRecord record;
    record.media = Media::kVideo;
    record.device = sc_.nodes[frame.node].id;
    record.emission_ts = frame.beacon;
    record.playout_ts = local_now(rt.clock, frame.tick);
    record.slot = sc_.connected_at(frame.tick);
    result_.traces[frame.node].frames.push_back({frame.tick, frame.beacon});
    if (sc_.quality.enabled) {
      recent_video_.emplace_back(frame.tick,
                                 static_cast<double>(record.playout_ts - record.emission_ts));
    }
    result_.log.records.push_back(std::move(record));
  }

  void on_audio(const Event& ev) {
    const PendingAudio& pulse = pending_audio_[static_cast<std::size_t>(ev.index)];
    const NodeRuntime& rt = runtime_[pulse.node];
    const double frequency = slot_frequency(sc_.audio, pulse.slot);
    const Timestamp playout = local_now(rt.clock, ev.time);
    result_.traces[pulse.node].pulses.push_back({pulse.onset, pulse.slot});
    auto emission = resolve_emission(sc_.audio, frequency, playout);
    if (auto* error = std::get_if<ToneError>(&emission)) {
      if (*error == ToneError::kAmbiguous) {
        ++result_.log.diagnostics.ambiguous_tones;
      } else {
        ++result_.log.diagnostics.unknown_tones;
      }
      return;
    }
    DetectionRecord record;
    record.media = Media::kAudio;
    record.device = sc_.nodes[pulse.node].id;
    record.emission_ts = std::get<Timestamp>(emission);
    record.playout_ts = playout;
    record.slot = sc_.connected_at(ev.time);
    record.frequency_hz = frequency;
    record.confidence = 1.0;
    result_.log.records.push_back(std::move(record));
  }

  void on_control(const Event& ev) {
    const double t = ev.time;
    const double next = t + 1000.0;
    if (next < end_) push(next, EventKind::kControl, 0, ev.index + 1);
    const double window = sc_.quality.window_s * 1000.0;
    while (!recent_video_.empty() && recent_video_.front().first <= t - window) {
      recent_video_.pop_front();
    }
    if (recent_video_.empty()) return;
    double sum = 0.0;
    for (const auto& [when, latency] : recent_video_) sum += latency;
    const double mean = sum / static_cast<double>(recent_video_.size());
    const double dwell = (t - last_change_) / 1000.0;
    QualityPolicy policy = sc_.quality.policy;
    policy.levels.clear();
    for (const auto& level : sc_.quality.levels) policy.levels.push_back(level.name);
    QualityDecision decision = adapt_quality(mean, level_, policy, dwell);
    if (decision.action != QualityAction::kHold) {
      level_ = decision.target_level;
      last_change_ = t;
      result_.quality_changes.emplace_back(t, sc_.quality.levels[level_].name);
    }
  }

  const SessionScenario& sc_;
  AudioDetectGrid grid_;
  std::uint64_t seed_;
  double start_;
  double end_;
  double frame_ms_;
  Link uplink_;
  Rng cell_rng_;
  std::map<std::string, double> cell_busy_;
  double uplink_fifo_ = -kInf;
  std::vector<NodeRuntime> runtime_;
  std::vector<PendingVideo> pending_video_;
  std::vector<PendingAudio> pending_audio_;
  std::deque<std::pair<double, double>> recent_video_;
  std::size_t level_ = 0;
  double last_change_ = 0.0;
  std::priority_queue<Event, std::vector<Event>, LaterFirst> queue_;
  std::uint64_t seq_ = 0;
  SimulationResult result_;
};

}  // namespace

SimulationResult simulate(const SessionScenario& scenario, std::uint64_t seed,
                          const AudioDetectGrid& grid) {
  scenario.validate();
  return Engine(scenario, seed, grid).run();
}

DetectionLog run_scenario(const SessionScenario& scenario, std::uint64_t seed) {
  return simulate(scenario, seed).log;
}

}  // namespace xrprobe
