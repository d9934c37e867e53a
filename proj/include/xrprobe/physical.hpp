#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "xrprobe/audio_beacon.hpp"
#include "xrprobe/detection.hpp"
#include "xrprobe/netsim.hpp"
#include "xrprobe/video_beacon.hpp"

namespace xrprobe {

// Sidecar of a frame sequence directory (frame_%06d.pgm files). Frame k was
// displayed at local time capture_start_ts + k * 1000 / fps.
struct VideoManifest {
  std::string device_id;
  double fps = 30.0;
  double capture_start_ts = 0.0;
  std::size_t frame_count = 0;
};

// Sidecar of a WAV recording; sample 0 played at local time start_ts.
struct AudioManifest {
  std::string device_id;
  int sample_rate = kDefaultSampleRate;
  double start_ts = 0.0;
  ToneSchedule schedule;
};

nlohmann::ordered_json to_json(const VideoManifest& m);
nlohmann::ordered_json to_json(const AudioManifest& m);
VideoManifest read_video_manifest(const std::filesystem::path& path);
AudioManifest read_audio_manifest(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j);

std::string frame_name(std::size_t index);

// Beacon frames as they would be captured on the presenter: frame k carries
// the beacon current at start + k * 1000 / fps.
void write_beacon_frames(const std::filesystem::path& dir, Timestamp start, std::size_t count,
                         double fps, const std::string& device_id, int scale = 3,
                         int quiet = 2);

struct FrameSequenceResult {
  std::vector<VideoDetection> detections;
  std::size_t finder_misses = 0;
  std::size_t crc_failures = 0;
};

// Decodes every frame of a directory written with a VideoManifest. A frame
// repeating the previous frame's beacon is the same picture still on
// screen and yields no new detection.
FrameSequenceResult detect_frame_sequence(const std::filesystem::path& dir);

// Decodes one WAV plus its manifest.
PulseDetectionResult detect_recording(const std::filesystem::path& wav,
                                      const AudioManifest& manifest);

// Renders a simulated session as real media: for each node
//   <dir>/<device>/frames/ (PGM sequence, one frame per display tick)
//   <dir>/<device>/audio.wav and audio.json
// plus <dir>/session.json with the join schedule used for slot labels.
void write_physical(const SessionScenario& scenario, const SimulationResult& result,
                    const std::filesystem::path& dir);

// Runs the beacon detectors over a directory written by write_physical.
DetectionLog detect_physical(const std::filesystem::path& dir);

}  // namespace xrprobe
