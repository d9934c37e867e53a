#include "xrprobe/audio_beacon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "xrprobe/error.hpp"

namespace xrprobe {
namespace {

double envelope(double t_ms, double duration_ms, double ramp_ms) {
  if (t_ms < 0.0 || t_ms > duration_ms) return 0.0;
  if (ramp_ms <= 0.0) return 1.0;
  if (t_ms < ramp_ms) {
    return 0.5 * (1.0 - std::cos(std::numbers::pi * t_ms / ramp_ms));
  }
  if (t_ms > duration_ms - ramp_ms) {
    return 0.5 * (1.0 - std::cos(std::numbers::pi * (duration_ms - t_ms) / ramp_ms));
  }
  return 1.0;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

struct PulseEvent {
  int tone = -1;
  Eigen::Index first_window = 0;
  // Estimate of the most confident window.
  double frequency = 0.0;
  double confidence = 0.0;
};

}  // namespace

double slot_frequency(const ToneSchedule& schedule, std::int64_t slot) {
  return schedule.tone(static_cast<int>(floor_mod(slot, schedule.tone_count)));
}

void mix_pulse(Eigen::Ref<Eigen::VectorXd> signal, double onset,
               double frequency_hz, const ToneSchedule& schedule,
               int sample_rate) {
  const double duration_ms = schedule.pulse_duration_ms;
  const double amplitude = kPulseAmplitude * full_scale<std::int16_t>();
  const double span = duration_ms * sample_rate / 1000.0;
  auto first = static_cast<Eigen::Index>(std::ceil(onset));
  auto last = static_cast<Eigen::Index>(std::floor(onset + span));
  first = std::max<Eigen::Index>(first, 0);
  last = std::min<Eigen::Index>(last, signal.size() - 1);
  for (Eigen::Index n = first; n <= last; ++n) {
    const double t_s = (static_cast<double>(n) - onset) / sample_rate;
    signal(n) += amplitude * envelope(t_s * 1000.0, duration_ms, schedule.ramp_ms) *
                 std::sin(2.0 * std::numbers::pi * frequency_hz * t_s);
  }
}

PcmBuffer quantize_pcm(const Eigen::VectorXd& signal, int sample_rate) {
  PcmBuffer pcm;
  pcm.sample_rate = sample_rate;
  pcm.samples = signal.unaryExpr([](double v) {
    return static_cast<std::int16_t>(std::clamp(std::round(v), -32768.0, 32767.0));
  });
  return pcm;
}

PcmBuffer synthesize(const ToneSchedule& schedule, std::int64_t start_slot,
                     std::int64_t n_slots, int sample_rate) {
  if (n_slots < 1) throw ConfigError("synthesize needs at least one slot");
  if (schedule.highest_tone() >= sample_rate / 2.0) {
    throw NyquistViolation("tone " + std::to_string(schedule.highest_tone()) +
                           " Hz is not below half of " +
                           std::to_string(sample_rate) + " Hz");
  }
  const double period = schedule.pulse_period_ms * sample_rate / 1000.0;
  const auto total = static_cast<Eigen::Index>(std::llround(period * n_slots));
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(total);
  for (std::int64_t i = 0; i < n_slots; ++i) {
    mix_pulse(signal, period * i, slot_frequency(schedule, start_slot + i),
              schedule, sample_rate);
  }
  return quantize_pcm(signal, sample_rate);
}

const char* to_string(ToneError error) {
  return error == ToneError::kUnknownTone ? "UnknownTone" : "Ambiguous";
}

std::optional<int> tone_index(const ToneSchedule& schedule, double frequency_hz) {
  if (!std::isfinite(frequency_hz)) return std::nullopt;
  double position = (frequency_hz - schedule.f0_hz) / schedule.delta_hz;
  auto k = static_cast<int>(std::clamp(std::round(position), 0.0,
                                       schedule.tone_count - 1.0));
  if (std::abs(frequency_hz - schedule.tone(k)) > schedule.delta_hz / 2.0) {
    return std::nullopt;
  }
  return k;
}

std::variant<Timestamp, ToneError> resolve_emission(
    const ToneSchedule& schedule, double frequency_hz, Timestamp playout_ts) {
  std::optional<int> k = tone_index(schedule, frequency_hz);
  if (!k) return ToneError::kUnknownTone;
  const std::int64_t elapsed = playout_ts - schedule.epoch_ts;
  if (elapsed < 0) return ToneError::kAmbiguous;
  const std::int64_t latest = elapsed / schedule.pulse_period_ms;
  const std::int64_t slot = latest - floor_mod(latest - *k, schedule.tone_count);
  if (slot < 0) return ToneError::kAmbiguous;
  return Timestamp{schedule.epoch_ts.ms + slot * schedule.pulse_period_ms};
}

SampleClock linear_sample_clock(double start_ms, int sample_rate) {
  return [start_ms, sample_rate](std::int64_t index) {
    return Timestamp{std::llround(start_ms + 1000.0 * static_cast<double>(index) /
                                                  sample_rate)};
  };
}

PulseDetectionResult detect_pulses(const PcmBuffer& pcm,
                                   const SampleClock& playout_clock,
                                   const ToneSchedule& schedule,
                                   std::string_view device_id,
                                   const PulseDetectorOptions& options) {
  PulseDetectionResult result;
  const auto& samples = pcm.samples;
  const double rate = pcm.sample_rate;
  const Eigen::Index window = options.window;

  std::vector<PulseEvent> events;
  std::optional<PulseEvent> open;
  auto close = [&] {
    if (open) events.push_back(*open);
    open.reset();
  };

  for (Eigen::Index start = 0; start + window <= samples.size();
       start += options.hop) {
    auto segment = samples.segment(start, window);
    auto estimate = estimate_frequency(segment, rate, options.pitch);
    if (!estimate) {
      close();
      continue;
    }
    std::optional<int> k = tone_index(schedule, estimate->frequency_hz);
    if (!k) {
      ++result.diagnostics.unknown_tone;
      close();
      continue;
    }
    if (open && open->tone == *k) {
      if (estimate->confidence > open->confidence) {
        open->frequency = estimate->frequency_hz;
        open->confidence = estimate->confidence;
      }
      continue;
    }

    // Opening a new pulse: the window has to start inside the tone.
    close();
    const Eigen::VectorXd x = segment.cast<double>();
    const double window_rms = std::sqrt(x.squaredNorm() / window);
    // Every lead block of the first half, so a silent gap after the
    // previous pulse's tail also disqualifies the window.
    bool sustained = true;
    for (Eigen::Index b = 0; b + options.lead_block <= window / 2; b += options.lead_block) {
      const double block_rms =
          std::sqrt(x.segment(b, options.lead_block).squaredNorm() / options.lead_block);
      if (block_rms < options.lead_ratio * window_rms) {
        sustained = false;
        break;
      }
    }
    if (!sustained) continue;
    auto lead_half = estimate_frequency(segment.head(window / 2), rate, options.pitch);
    if (!lead_half || tone_index(schedule, lead_half->frequency_hz) != k) continue;

    open = PulseEvent{*k, start, estimate->frequency_hz, estimate->confidence};
  }
  close();

  const double min_spacing = schedule.pulse_period_ms * rate / 2000.0;
  const PulseEvent* previous = nullptr;
  for (const auto& event : events) {
    if (previous && previous->tone == event.tone &&
        static_cast<double>(event.first_window - previous->first_window) <
            min_spacing) {
      continue;
    }
    previous = &event;
    const double frequency = event.frequency;
    const Timestamp playout = playout_clock(event.first_window);
    auto emission = resolve_emission(schedule, frequency, playout);
    if (auto* error = std::get_if<ToneError>(&emission)) {
      if (*error == ToneError::kAmbiguous) {
        ++result.diagnostics.ambiguous;
      } else {
        ++result.diagnostics.unknown_tone;
      }
      continue;
    }
    result.detections.push_back({std::string(device_id),
                                 std::get<Timestamp>(emission), playout,
                                 frequency, event.confidence,
                                 static_cast<std::int64_t>(event.first_window)});
  }
  return result;
}

}  // namespace xrprobe
