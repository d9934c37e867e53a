#include "xrprobe/physical.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "xrprobe/clock.hpp"
#include "xrprobe/error.hpp"
#include "xrprobe/pgm.hpp"
#include "xrprobe/wav.hpp"

namespace xrprobe {

namespace fs = std::filesystem;

namespace {

constexpr int kFrameScale = 3;
constexpr int kFrameQuiet = 2;
constexpr std::uint8_t kBlankGray = 128;

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json schedule_json(const ToneSchedule& s) {
  return {{"f0_hz", s.f0_hz},
          {"delta_hz", s.delta_hz},
          {"tones", s.tone_count},
          {"pulse_period_ms", s.pulse_period_ms},
          {"pulse_duration_ms", s.pulse_duration_ms},
          {"ramp_ms", s.ramp_ms},
          {"epoch_ts", s.epoch_ts.ms}};
}

PixelBuffer beacon_frame(Timestamp ts) {
  return rasterize(encode_beacon(ts), kFrameScale, kFrameQuiet);
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::ordered_json to_json(const VideoManifest& m) {
  return {{"device_id", m.device_id},
          {"fps", m.fps},
          {"capture_start_ts", m.capture_start_ts},
          {"frame_count", m.frame_count}};
}

nlohmann::ordered_json to_json(const AudioManifest& m) {
  return {{"device_id", m.device_id},
          {"sample_rate", m.sample_rate},
          {"start_ts", m.start_ts},
          {"schedule", schedule_json(m.schedule)}};
}

VideoManifest read_video_manifest(const fs::path& path) {
  const auto j = read_json_file(path);
  try {
    VideoManifest m;
    m.device_id = j.at("device_id").get<std::string>();
    m.fps = j.at("fps").get<double>();
    m.capture_start_ts = j.at("capture_start_ts").get<double>();
    m.frame_count = j.value("frame_count", std::size_t{0});
    if (!(m.fps > 0.0)) throw IoError(path.string() + ": fps must be positive");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

AudioManifest read_audio_manifest(const fs::path& path) {
  const auto j = read_json_file(path);
  try {
    AudioManifest m;
    m.device_id = j.at("device_id").get<std::string>();
    m.sample_rate = j.value("sample_rate", kDefaultSampleRate);
    m.start_ts = j.at("start_ts").get<double>();
    const auto& s = j.at("schedule");
    m.schedule.f0_hz = s.value("f0_hz", m.schedule.f0_hz);
    m.schedule.delta_hz = s.value("delta_hz", m.schedule.delta_hz);
    m.schedule.tone_count = s.value("tones", m.schedule.tone_count);
    m.schedule.pulse_period_ms = s.value("pulse_period_ms", m.schedule.pulse_period_ms);
    m.schedule.pulse_duration_ms = s.value("pulse_duration_ms", m.schedule.pulse_duration_ms);
    m.schedule.ramp_ms = s.value("ramp_ms", m.schedule.ramp_ms);
    m.schedule.epoch_ts = Timestamp{s.at("epoch_ts").get<std::int64_t>()};
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string frame_name(std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06zu.pgm", index);
  return name;
}

void write_beacon_frames(const fs::path& dir, Timestamp start, std::size_t count, double fps,
                         const std::string& device_id, int scale, int quiet) {
  make_dirs(dir);
  const double interval = 1000.0 / fps;
  for (std::size_t k = 0; k < count; ++k) {
    const double local = static_cast<double>(start.ms) + static_cast<double>(k) * interval;
    write_pgm(dir / frame_name(k), rasterize(encode_beacon(beacon_at(start, local)), scale, quiet));
  }
  write_json_file(dir / "manifest.json",
                  to_json(VideoManifest{device_id, fps, static_cast<double>(start.ms), count}));
}

FrameSequenceResult detect_frame_sequence(const fs::path& dir) {
  const VideoManifest m = read_video_manifest(dir / "manifest.json");
  FrameSequenceResult result;
  std::optional<Timestamp> previous;
  for (std::size_t k = 0;; ++k) {
    if (m.frame_count > 0 && k >= m.frame_count) break;
    const fs::path path = dir / frame_name(k);
    if (m.frame_count == 0 && !fs::exists(path)) break;
    const PixelBuffer frame = read_pgm(path);
    const Timestamp playout{std::llround(m.capture_start_ts + static_cast<double>(k) * 1000.0 / m.fps)};
    DecodeResult decoded = detect_decode(frame, playout, m.device_id);
    if (auto* error = std::get_if<DecodeError>(&decoded)) {
      if (*error == DecodeError::kCrcMismatch) {
        ++result.crc_failures;
      } else {
        ++result.finder_misses;
      }
      continue;
    }
    auto& detection = std::get<VideoDetection>(decoded);
    if (previous && *previous == detection.emission_ts) continue;
    previous = detection.emission_ts;
    result.detections.push_back(std::move(detection));
  }
  return result;
}

PulseDetectionResult detect_recording(const fs::path& wav, const AudioManifest& manifest) {
  const PcmBuffer pcm = read_wav(wav);
  if (pcm.sample_rate != manifest.sample_rate) {
    throw IoError(wav.string() + ": sample rate differs from its manifest");
  }
  return detect_pulses(pcm, linear_sample_clock(manifest.start_ts, pcm.sample_rate),
                       manifest.schedule, manifest.device_id);
}

void write_physical(const SessionScenario& scenario, const SimulationResult& result,
                    const fs::path& dir) {
  make_dirs(dir);
  const double frame_ms = scenario.frame_interval_ms();
  const double end = scenario.end_true_ms();
  const int rate = kDefaultSampleRate;

  nlohmann::ordered_json session;
  session["start_ts"] = scenario.start_ts.ms;
  session["devices"] = nlohmann::ordered_json::array();
  session["joins_s"] = nlohmann::ordered_json::array();
  for (const auto& node : scenario.nodes) {
    session["devices"].push_back(node.id);
    session["joins_s"].push_back(node.join_s);
  }
  write_json_file(dir / "session.json", session);

  PixelBuffer blank = PixelBuffer::Constant((kGridSize + 2 * kFrameQuiet) * kFrameScale,
                                            (kGridSize + 2 * kFrameQuiet) * kFrameScale,
                                            kBlankGray);
  for (const auto& trace : result.traces) {
    const fs::path node_dir = dir / trace.device;
    const fs::path frames_dir = node_dir / "frames";
    make_dirs(frames_dir);

    // One picture per display tick; the screen keeps the last frame.
    const auto ticks = static_cast<std::size_t>(
        std::max(0.0, std::ceil((end - trace.first_tick_true_ms) / frame_ms - 1e-9)));
    std::size_t next = 0;
    const PixelBuffer* shown = &blank;
    PixelBuffer current;
    for (std::size_t k = 0; k < ticks; ++k) {
      const double tick = trace.first_tick_true_ms + static_cast<double>(k) * frame_ms;
      bool changed = false;
      while (next < trace.frames.size() && trace.frames[next].tick_true_ms <= tick + 1e-6) {
        ++next;
        changed = true;
      }
      if (changed) {
        current = beacon_frame(trace.frames[next - 1].beacon);
        shown = &current;
      }
      write_pgm(frames_dir / frame_name(k), *shown);
    }
    write_json_file(frames_dir / "manifest.json",
                    to_json(VideoManifest{trace.device, static_cast<double>(scenario.fps),
                                          trace.first_tick_local_ms, ticks}));

    const auto n_samples = static_cast<Eigen::Index>(
        std::floor((end - trace.join_true_ms) * rate / 1000.0));
    Eigen::VectorXd signal = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n_samples, 0));
    for (const auto& pulse : trace.pulses) {
      const double onset = (pulse.onset_true_ms - trace.join_true_ms) * rate / 1000.0;
      mix_pulse(signal, onset, slot_frequency(scenario.audio, pulse.slot), scenario.audio, rate);
    }
    write_wav(node_dir / "audio.wav", quantize_pcm(signal, rate));
    write_json_file(node_dir / "audio.json",
                    to_json(AudioManifest{trace.device, rate, trace.join_local_ms, scenario.audio}));
  }
}

DetectionLog detect_physical(const fs::path& dir) {
  const auto session = read_json_file(dir / "session.json");
  std::vector<std::string> devices;
  std::vector<double> joins_ms;
  double start = 0.0;
  try {
    start = session.at("start_ts").get<double>();
    devices = session.at("devices").get<std::vector<std::string>>();
    for (double s : session.at("joins_s").get<std::vector<double>>()) {
      joins_ms.push_back(start + s * 1000.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError((dir / "session.json").string() + ": " + e.what());
  }
  auto slot_of = [&](Timestamp playout) {
    int n = 0;
    for (double j : joins_ms) n += static_cast<double>(playout.ms) >= j ? 1 : 0;
    return n;
  };

  DetectionLog log;
  for (const auto& device : devices) {
    const fs::path node_dir = dir / device;
    FrameSequenceResult video = detect_frame_sequence(node_dir / "frames");
    log.diagnostics.finder_misses += video.finder_misses;
    log.diagnostics.crc_failures += video.crc_failures;
    for (const auto& d : video.detections) {
      log.records.push_back({Media::kVideo, d.device_id, d.emission_ts, d.playout_ts,
                             slot_of(d.playout_ts), std::nullopt, std::nullopt});
    }
    const AudioManifest manifest = read_audio_manifest(node_dir / "audio.json");
    PulseDetectionResult audio = detect_recording(node_dir / "audio.wav", manifest);
    log.diagnostics.unknown_tones += audio.diagnostics.unknown_tone;
    log.diagnostics.ambiguous_tones += audio.diagnostics.ambiguous;
    for (const auto& d : audio.detections) {
      log.records.push_back({Media::kAudio, d.device_id, d.emission_ts, d.playout_ts,
                             slot_of(d.playout_ts), d.frequency_hz, d.confidence});
    }
  }
  sort_records(log.records);
  return log;
}

}  // namespace xrprobe
