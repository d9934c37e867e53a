#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xrprobe/pitch.hpp"
#include "xrprobe/timestamp.hpp"

namespace xrprobe {

inline constexpr int kDefaultSampleRate = 48000;

// Slot s starts at epoch_ts + s * pulse_period_ms and carries tone
// f0_hz + (s mod tone_count) * delta_hz.
struct ToneSchedule {
  double f0_hz = 600.0;
  double delta_hz = 120.0;
  int tone_count = 32;
  int pulse_period_ms = 100;
  int pulse_duration_ms = 80;
  int ramp_ms = 5;
  Timestamp epoch_ts{};

  double tone(int k) const { return f0_hz + k * delta_hz; }
  double highest_tone() const { return tone(tone_count - 1); }
  std::int64_t ambiguity_window_ms() const {
    return static_cast<std::int64_t>(tone_count) * pulse_period_ms;
  }
};

using PcmSamples = Eigen::Matrix<std::int16_t, Eigen::Dynamic, 1>;

// Mono signed 16-bit PCM.
struct PcmBuffer {
  int sample_rate = kDefaultSampleRate;
  PcmSamples samples;

  double duration_ms() const {
    return 1000.0 * static_cast<double>(samples.size()) / sample_rate;
  }
};

inline constexpr double kPulseAmplitude = 0.5;  // of full scale

double slot_frequency(const ToneSchedule& schedule, std::int64_t slot);

// Adds one enveloped pulse of `frequency_hz` starting at the (possibly
// fractional) sample position `onset` into `signal`, in full-scale units.
void mix_pulse(Eigen::Ref<Eigen::VectorXd> signal, double onset,
               double frequency_hz, const ToneSchedule& schedule,
               int sample_rate);

// Rounds and clamps a full-scale-unit signal to 16-bit PCM.
PcmBuffer quantize_pcm(const Eigen::VectorXd& signal, int sample_rate);

// n_slots pulse periods of audio; sample 0 is the start of start_slot.
// Throws NyquistViolation when any schedule tone reaches sample_rate / 2.
PcmBuffer synthesize(const ToneSchedule& schedule, std::int64_t start_slot,
                     std::int64_t n_slots, int sample_rate = kDefaultSampleRate);

enum class ToneError { kUnknownTone, kAmbiguous };

const char* to_string(ToneError error);

// Nearest schedule tone index within delta/2 of frequency_hz.
std::optional<int> tone_index(const ToneSchedule& schedule, double frequency_hz);

// Latest emission time <= playout_ts whose slot carries the tone nearest to
// frequency_hz.
std::variant<Timestamp, ToneError> resolve_emission(
    const ToneSchedule& schedule, double frequency_hz, Timestamp playout_ts);

struct AudioDetection {
  std::string device_id;
  Timestamp emission_ts;
  Timestamp playout_ts;
  double frequency_hz = 0.0;
  double confidence = 0.0;
  // Start of the first window of the pulse event.
  std::int64_t onset_sample = 0;
};

struct PulseDetectorOptions {
  Eigen::Index window = 2048;
  Eigen::Index hop = 512;
  // A window opens a pulse only if every `lead_block` samples of its first
  // half carry at least `lead_ratio` of the window RMS and the first half
  // agrees on the tone; windows that start in silence or in the previous
  // pulse's tail cannot open an event early.
  Eigen::Index lead_block = 64;
  double lead_ratio = 0.5;
  PitchOptions pitch;
};

struct PulseDiagnostics {
  std::size_t unknown_tone = 0;
  std::size_t ambiguous = 0;
};

struct PulseDetectionResult {
  std::vector<AudioDetection> detections;
  PulseDiagnostics diagnostics;
};

using SampleClock = std::function<Timestamp(std::int64_t sample_index)>;

PulseDetectionResult detect_pulses(const PcmBuffer& pcm,
                                   const SampleClock& playout_clock,
                                   const ToneSchedule& schedule,
                                   std::string_view device_id = {},
                                   const PulseDetectorOptions& options = {});

// Sample clock for a recording whose first sample played at start_ms.
SampleClock linear_sample_clock(double start_ms, int sample_rate);

}  // namespace xrprobe
