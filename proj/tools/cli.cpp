#include "xrprobe/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "xrprobe/audio_beacon.hpp"
#include "xrprobe/error.hpp"
#include "xrprobe/exporter.hpp"
#include "xrprobe/log_io.hpp"
#include "xrprobe/physical.hpp"
#include "xrprobe/report.hpp"
#include "xrprobe/scenario.hpp"
#include "xrprobe/wav.hpp"

namespace xrprobe::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_logger_mt("xrprobe");
    l->set_pattern("[%l] %v");
    return l;
  }();
  const char* env = std::getenv("XRPROBE_LOG_LEVEL");
  const std::string level = env ? env : "warn";
  if (level == "error") {
    instance->set_level(spdlog::level::err);
  } else if (level == "info") {
    instance->set_level(spdlog::level::info);
  } else if (level == "debug") {
    instance->set_level(spdlog::level::debug);
  } else {
    instance->set_level(spdlog::level::warn);
  }
  return instance;
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void emit_log(const std::vector<DetectionRecord>& records, const std::string& out_path,
              std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    for (const auto& r : records) out << to_json_line(r) << '\n';
    return;
  }
  write_log(records, out_path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::optional<nlohmann::json> read_json_optional(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// A log path may name a JSON-lines file or a simulate output directory.
DetectionLog load_log(const fs::path& path) {
  DetectionLog log;
  fs::path file = path;
  if (fs::is_directory(path)) {
    file = path / "detections.jsonl";
    if (auto diag = read_json_optional(path / "diagnostics.json")) {
      log.diagnostics = diagnostics_from_json(*diag);
    }
  }
  if (!fs::exists(file)) throw IoError("no such log: " + file.string());
  log.records = read_log(file);
  return log;
}

struct Options {
  // gen-video / gen-audio
  std::int64_t ts = 1'700'000'000'000;
  std::size_t count = 30;
  std::uint32_t fps = 30;
  int scale = 3;
  int quiet = 2;
  std::string device = "presenter";
  std::int64_t slots = 10;
  std::int64_t start_slot = 0;
  int rate = kDefaultSampleRate;
  // detection
  std::string frames;
  std::string wav;
  std::string manifest;
  // simulate / analyze / serve
  std::string scenario;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string log;
  std::uint32_t epoch_ms = 1000;
  std::string reduce = "min";
  std::optional<double> sync_target_ms;
  bool physical = false;
  std::uint16_t serve_port = 0;
  std::string host = "127.0.0.1";
};

int gen_video(const Options& o, std::ostream& out) {
  write_beacon_frames(o.out, Timestamp{o.ts}, o.count, o.fps, o.device, o.scale, o.quiet);
  out << "wrote " << o.count << " frames to " << o.out << '\n';
  return 0;
}

int gen_audio(const Options& o, std::ostream& out) {
  ToneSchedule schedule;
  schedule.epoch_ts = Timestamp{o.ts};
  const PcmBuffer pcm = synthesize(schedule, o.start_slot, o.slots, o.rate);
  const fs::path wav = o.out;
  if (wav.has_parent_path()) make_dirs(wav.parent_path());
  write_wav(wav, pcm);
  const double start = static_cast<double>(o.ts) +
                       static_cast<double>(o.start_slot) * schedule.pulse_period_ms;
  fs::path manifest = wav;
  manifest.replace_extension(".json");
  write_json_file(manifest, to_json(AudioManifest{o.device, o.rate, start, schedule}));
  out << "wrote " << pcm.samples.size() << " samples to " << wav.string() << '\n';
  return 0;
}

int detect_video(const Options& o, std::ostream& out) {
  FrameSequenceResult result = detect_frame_sequence(o.frames);
  std::vector<DetectionRecord> records;
  for (const auto& d : result.detections) {
    records.push_back({Media::kVideo, d.device_id, d.emission_ts, d.playout_ts, 0,
                       std::nullopt, std::nullopt});
  }
  logger()->info("{} detections, {} finder misses, {} CRC failures", records.size(),
                 result.finder_misses, result.crc_failures);
  emit_log(records, o.out, out);
  return 0;
}

int detect_audio(const Options& o, std::ostream& out) {
  fs::path manifest_path = o.manifest;
  if (manifest_path.empty()) {
    manifest_path = o.wav;
    manifest_path.replace_extension(".json");
  }
  const AudioManifest manifest = read_audio_manifest(manifest_path);
  PulseDetectionResult result = detect_recording(o.wav, manifest);
  std::vector<DetectionRecord> records;
  for (const auto& d : result.detections) {
    records.push_back({Media::kAudio, d.device_id, d.emission_ts, d.playout_ts, 0,
                       d.frequency_hz, d.confidence});
  }
  logger()->info("{} detections, {} unknown tones, {} ambiguous", records.size(),
                 result.diagnostics.unknown_tone, result.diagnostics.ambiguous);
  emit_log(records, o.out, out);
  return 0;
}

SessionScenario resolve_scenario(const Options& o, const CLI::App& cmd) {
  SessionScenario sc;
  if (!o.scenario.empty()) {
    sc = load_scenario(o.scenario);
  } else {
    auto profile = builtin_profile(o.profile.empty() ? "ethernet" : o.profile);
    if (!profile) throw SchemaError("profiles", "unknown profile '" + o.profile + "'");
    sc = default_scenario(*profile);
  }
  if (cmd.count("--fps") > 0) sc.fps = static_cast<int>(o.fps);
  if (o.seed) sc.seed = *o.seed;
  sc.validate();
  return sc;
}

int simulate_cmd(const Options& o, const CLI::App& cmd, std::ostream& out) {
  const SessionScenario sc = resolve_scenario(o, cmd);
  const fs::path dir = o.out;
  make_dirs(dir);
  logger()->info("simulating {} s, {} nodes, seed {}", sc.duration_s, sc.nodes.size(), sc.seed);
  SimulationResult result = simulate(sc, sc.seed);
  write_log(result.log.records, dir / "detections.jsonl");
  write_json_file(dir / "diagnostics.json", to_json(result.log.diagnostics));
  write_json_file(dir / "scenario.json", scenario_to_json(sc));
  if (sc.quality.enabled) {
    nlohmann::ordered_json changes = nlohmann::ordered_json::array();
    for (const auto& [t, level] : result.quality_changes) {
      changes.push_back({{"t_ms", t - static_cast<double>(sc.start_ts.ms)}, {"level", level}});
    }
    write_json_file(dir / "quality.json", changes);
  }
  out << result.log.records.size() << " records written to " << (dir / "detections.jsonl").string()
      << '\n';
  if (o.physical) {
    write_physical(sc, result, dir / "physical");
    DetectionLog physical = detect_physical(dir / "physical");
    write_log(physical.records, dir / "physical" / "detections.jsonl");
    write_json_file(dir / "physical" / "diagnostics.json", to_json(physical.diagnostics));
    out << physical.records.size() << " records detected from rendered media\n";
  }
  return 0;
}

int analyze_cmd(const Options& o, std::ostream& out) {
  const DetectionLog log = load_log(o.log);
  AnalysisOptions options;
  options.epoch_ms = o.epoch_ms;
  options.reduce = o.reduce == "mean" ? EpochReduce::kMean : EpochReduce::kMin;
  if (o.sync_target_ms) options.sync_target_ms = *o.sync_target_ms;
  const AnalysisReport report = analyze(log, options);
  fs::path dir = o.out;
  if (dir.empty()) dir = fs::is_directory(o.log) ? fs::path(o.log) / "analysis" : fs::path("analysis");
  write_report(report, dir);
  if (report.clock_skew_suspected > 0) {
    logger()->warn("{} records with negative latency rejected", report.clock_skew_suspected);
  }
  for (const auto& [media, summary] : report.media) {
    out << to_string(media) << " mean " << format_number(summary.mean_ms) << " ms over "
        << summary.n << " samples\n";
  }
  out << "inter-device asynchrony (video) max " << format_number(report.video_asynchrony.max_ms)
      << " ms, mean " << format_number(report.video_asynchrony.mean_ms) << " ms\n";
  out << "report written to " << (dir / "report.json").string() << '\n';
  return 0;
}

volatile std::sig_atomic_t g_stop = 0;

int serve_cmd(const Options& o, std::ostream& out) {
  MetricsRegistry registry;
  if (!o.log.empty()) {
    const DetectionLog log = load_log(o.log);
    for (const auto& r : log.records) registry.ingest(r);
    registry.add_diagnostics(log.diagnostics);
  }
  if (o.serve_port == 0) {
    out << render_exposition(registry.snapshot());
    return 0;
  }
  ControlState control;
  MetricsServer server(registry, control);
  const int port = server.start(o.host, o.serve_port);
  out << "serving http://" << o.host << ":" << port << "/metrics\n" << std::flush;
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"XR QoS probe: timestamp beacons, pipeline simulation and metrics", "xrprobe"};
  app.require_subcommand(1);
  Options o;

  auto* gv = app.add_subcommand("gen-video", "Write a PGM sequence of beacon frames");
  gv->add_option("--ts", o.ts, "Stream start timestamp (ms since epoch)");
  gv->add_option("--count", o.count, "Number of frames")->check(CLI::PositiveNumber);
  gv->add_option("--fps", o.fps, "Frame rate")->check(CLI::Range(1, 1000));
  gv->add_option("--scale", o.scale, "Pixels per module")->check(CLI::Range(1, 64));
  gv->add_option("--quiet", o.quiet, "Quiet zone in modules")->check(CLI::Range(0, 64));
  gv->add_option("--device-id", o.device, "Device id for the manifest");
  gv->add_option("--out", o.out, "Output directory")->required();

  auto* ga = app.add_subcommand("gen-audio", "Write a WAV of beacon pulses plus manifest");
  ga->add_option("--ts", o.ts, "Schedule epoch (ms since epoch)");
  ga->add_option("--slots", o.slots, "Number of pulse slots")->check(CLI::PositiveNumber);
  ga->add_option("--start-slot", o.start_slot, "First slot")->check(CLI::NonNegativeNumber);
  ga->add_option("--rate", o.rate, "Sample rate (Hz)")->check(CLI::Range(8000, 192000));
  ga->add_option("--device-id", o.device, "Device id for the manifest");
  ga->add_option("--seed", o.seed, "Unused; accepted for uniformity");
  ga->add_option("--out", o.out, "Output WAV path")->required();

  auto* dv = app.add_subcommand("detect-video", "Decode beacons from a frame sequence");
  dv->add_option("--frames", o.frames, "Frame directory with manifest.json")->required();
  dv->add_option("--out", o.out, "Output JSON-lines log (default stdout)");

  auto* da = app.add_subcommand("detect-audio", "Detect beacon pulses in a WAV recording");
  da->add_option("--wav", o.wav, "WAV file")->required();
  da->add_option("--manifest", o.manifest, "Manifest JSON (default: WAV path with .json)");
  da->add_option("--out", o.out, "Output JSON-lines log (default stdout)");

  auto* sim = app.add_subcommand("simulate", "Run a session scenario");
  auto* scenario_opt = sim->add_option("--scenario", o.scenario, "Scenario JSON");
  sim->add_option("--profile", o.profile, "Built-in profile for the default scenario")
      ->excludes(scenario_opt);
  sim->add_option("--seed", o.seed, "Random seed (overrides the scenario)");
  sim->add_option("--fps", o.fps, "Frame rate override")->check(CLI::Range(1, 1000));
  sim->add_option("--out", o.out, "Output directory")->required();
  sim->add_flag("--physical", o.physical, "Also render PGM/WAV media and run the detectors");

  auto* an = app.add_subcommand("analyze", "Compute latency and asynchrony metrics");
  an->add_option("--log", o.log, "Detection log or simulate output directory")->required();
  an->add_option("--epoch-ms", o.epoch_ms, "Epoch width (ms)")->check(CLI::Range(1u, 3600000u));
  an->add_option("--reduce", o.reduce, "Per-epoch device latency")
      ->check(CLI::IsMember({"min", "mean"}));
  an->add_option("--sync-target-ms", o.sync_target_ms, "Inter-device asynchrony target");
  an->add_option("--out", o.out, "Report directory");

  auto* sv = app.add_subcommand("serve", "Expose metrics of a log over HTTP");
  sv->add_option("--log", o.log, "Detection log or simulate output directory");
  sv->add_option("--serve-port", o.serve_port, "TCP port; 0 prints the exposition and exits");
  sv->add_option("--host", o.host, "Bind address");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (const auto* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return 2;
  }

  try {
    if (*gv) return gen_video(o, out);
    if (*ga) return gen_audio(o, out);
    if (*dv) return detect_video(o, out);
    if (*da) return detect_audio(o, out);
    if (*sim) return simulate_cmd(o, *sim, out);
    if (*an) return analyze_cmd(o, out);
    if (*sv) return serve_cmd(o, out);
  } catch (const SchemaError& e) {
    err << "error: schema: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: io: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    err << "error: parse: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace xrprobe::cli
