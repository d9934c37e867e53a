#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xrprobe/audio_beacon.hpp"
#include "xrprobe/detection.hpp"
#include "xrprobe/quality.hpp"
#include "xrprobe/rng.hpp"
#include "xrprobe/timestamp.hpp"

namespace xrprobe {

enum class JitterKind { kGaussian, kLognormal };

// Non-negative delay added on top of the profile base:
//   gaussian:  |N(0, sigma_ms)|
//   lognormal: exp(N(mu, sigma)) ms
struct JitterModel {
  JitterKind kind = JitterKind::kGaussian;
  double sigma_ms = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

enum class OutageScope {
  // Each link runs its own burst state machine.
  kLink,
  // One trigger per cell (all links on the profile); each link is stalled
  // with probability hit_prob for its own duration.
  kCell,
};

struct OutageModel {
  double enter_prob = 0.0;  // per event
  double min_ms = 0.0;
  double max_ms = 0.0;
  OutageScope scope = OutageScope::kLink;
  double hit_prob = 1.0;
  bool affects_audio = false;
};

struct NetworkProfile {
  std::string name;
  double base_one_way_ms = 0.0;
  JitterModel jitter;
  std::optional<OutageModel> outage;
  double loss_prob = 0.0;
};

// ethernet, wifi or fiveg; nullopt otherwise.
std::optional<NetworkProfile> builtin_profile(std::string_view name);

struct BurstState {
  double outage_end_ms = -std::numeric_limits<double>::infinity();

  bool in_outage(double t_ms) const { return t_ms < outage_end_ms; }
};

double jitter_draw(const JitterModel& jitter, Rng& rng);

// base + jitter + residual outage time at t. Link-scoped outages may be
// entered by this call (probability enter_prob); cell-scoped bursts are
// driven externally through `state`.
double sample_hop_delay(const NetworkProfile& profile, Rng& rng, double t_ms,
                        BurstState& state);

// As above, for events that ride through outages (audio, unless the
// outage model says otherwise). Never enters a burst.
double sample_passive_delay(const NetworkProfile& profile, Rng& rng, double t_ms,
                            const BurstState& state, bool include_outage);

// Stage delays of the presenter -> edge renderer -> viewer chain. Capture
// interval and display quantum both follow the scenario frame rate.
struct PipelineModel {
  double encode_ms = 15.0;
  double render_ms = 10.0;
  double decode_ms = 5.0;
  double audio_buffer_ms = 20.0;
  // Video playout holds the worst recent delay and catches up at this rate.
  bool jitter_buffer = true;
  double catchup_ms_per_s = 300.0;
};

struct QualityLevel {
  std::string name;
  double encode_delta_ms = 0.0;
  double network_delta_ms = 0.0;
};

// Configuration-API hook: quality steps applied as stage-delay deltas.
struct QualityConfig {
  bool enabled = false;
  std::vector<QualityLevel> levels;
  std::size_t initial_level = 0;
  QualityPolicy policy;
  double window_s = 5.0;
};

struct NodeSpec {
  std::string id;
  double join_s = 0.0;
  NetworkProfile profile;
  double drift_ppm = 0.0;
  // Systematic clock error kept across syncs (e.g. asymmetric NTP paths);
  // added to every residual draw.
  double offset_ms = 0.0;
};

struct ClockConfig {
  double ntp_sigma_ms = 0.5;
  double sync_interval_s = 64.0;
};

struct SessionScenario {
  double duration_s = 300.0;
  Timestamp start_ts{1'700'000'000'000};
  int fps = 30;
  int beacon_interval_ms = 10;
  ToneSchedule audio;
  // nodes[0] is the presenter and joins at 0 s.
  std::vector<NodeSpec> nodes;
  ClockConfig clocks;
  PipelineModel pipeline;
  QualityConfig quality;
  std::uint64_t seed = 42;

  double frame_interval_ms() const { return 1000.0 / fps; }
  double end_true_ms() const {
    return static_cast<double>(start_ts.ms) + duration_s * 1000.0;
  }
  // Nodes joined at `true_ms` (an absolute time on the simulator axis).
  int connected_at(double true_ms) const;

  // Throws ConfigError/SchemaError.
  void validate() const;
};

// Presenter plus viewers joining at 60, 120, 180, 240 s, all on `profile`.
SessionScenario default_scenario(const NetworkProfile& profile);

// Window geometry of the audio detector; the symbolic path quantizes pulse
// onsets onto the same grid.
struct AudioDetectGrid {
  double hop_ms = 512.0 * 1000.0 / kDefaultSampleRate;
  double window_ms = 2048.0 * 1000.0 / kDefaultSampleRate;
  // How far into the attack ramp a window must start before the detector's
  // onset gate accepts it (matched against rendered PCM).
  double onset_lead_ms = 1.8;
};

struct DisplayedFrame {
  double tick_true_ms;
  Timestamp beacon;
};

struct PlayedPulse {
  double onset_true_ms;
  std::int64_t slot;
};

// Per-node playout timeline, enough to render real frames and PCM.
struct NodeTrace {
  std::string device;
  double join_true_ms = 0.0;
  double first_tick_true_ms = 0.0;
  double first_tick_local_ms = 0.0;
  double join_local_ms = 0.0;
  std::vector<DisplayedFrame> frames;
  std::vector<PlayedPulse> pulses;
};

struct SimulationResult {
  DetectionLog log;
  std::vector<NodeTrace> traces;
  std::vector<std::pair<double, std::string>> quality_changes;
};

SimulationResult simulate(const SessionScenario& scenario, std::uint64_t seed,
                          const AudioDetectGrid& grid = {});

// Detection log only; a pure function of (scenario, seed).
DetectionLog run_scenario(const SessionScenario& scenario, std::uint64_t seed);

}  // namespace xrprobe
