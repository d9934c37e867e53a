// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <tuple>

#include "metrics_oracle.hpp"
#include "xrprobe/audio_beacon.hpp"
#include "xrprobe/cli.hpp"
#include "xrprobe/log_io.hpp"
#include "xrprobe/metrics.hpp"
#include "xrprobe/netsim.hpp"
#include "xrprobe/pitch.hpp"
#include "xrprobe/video_beacon.hpp"

using namespace xrprobe;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

void video_roundtrip() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240601);
  std::uniform_int_distribution<std::int64_t> ts(0, std::numeric_limits<std::int64_t>::max());
  std::size_t failed = 0;
  std::size_t total = 0;
  for (int i = 0; i < 10000; ++i) {
    const Timestamp t{ts(gen)};
    const ModuleGrid grid = encode_beacon(t);
    for (int scale : {3, 8, 16}) {
      ++total;
      const auto result = detect_decode(rasterize(grid, scale, 4), Timestamp{0});
      const auto* d = std::get_if<VideoDetection>(&result);
      if (!d || d->emission_ts != t) ++failed;
    }
  }
  const double secs = seconds_since(t0);
  report(1, failed == 0 && secs < 30.0,
         fmt("video roundtrip %zu/%zu decoded (10000 timestamps x scales 3/8/16), %.1f s",
             total - failed, total, secs));
}

void audio_loopback() {
  ToneSchedule s;
  s.epoch_ts = Timestamp{1'700'000'000'000};
  const int slots = 10000 / s.pulse_period_ms;
  const PcmBuffer pcm = synthesize(s, 0, slots, kDefaultSampleRate);
  bool ok = true;
  std::string detail;
  for (int d : {50, 250, 900}) {
    const auto result = detect_pulses(
        pcm, linear_sample_clock(static_cast<double>(s.epoch_ts.ms + d), kDefaultSampleRate), s);
    std::size_t within = 0;
    for (const auto& det : result.detections) {
      const double m2e = static_cast<double>(det.playout_ts.ms - det.emission_ts.ms);
      if (std::abs(m2e - d) <= 25.0) ++within;
    }
    const double share = static_cast<double>(within) / slots;
    ok = ok && share >= 0.95;
    detail += fmt("d=%d: %zu/%d within 25 ms; ", d, within, slots);
  }
  report(2, ok, "audio loopback " + detail);
}

void pitch_accuracy() {
  const double rate = kDefaultSampleRate;
  std::mt19937_64 gen(77);
  double worst_clean = 0.0;
  double worst_noisy = 0.0;
  bool all_found = true;
  for (int i = 0; i < 25; ++i) {
    const double f = 200.0 + i * (4800.0 - 200.0) / 24.0;
    const double amp = 0.5;
    // 20 dB SNR: noise power is a hundredth of the sine power amp^2 / 2.
    std::normal_distribution<double> noise(0.0, amp / std::sqrt(2.0) / 10.0);
    Eigen::VectorXd clean(2048), noisy(2048);
    for (Eigen::Index n = 0; n < clean.size(); ++n) {
      clean[n] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) / rate + 0.7);
      noisy[n] = clean[n] + noise(gen);
    }
    const auto a = estimate_frequency(clean, rate);
    const auto b = estimate_frequency(noisy, rate);
    if (!a || !b) {
      all_found = false;
      continue;
    }
    worst_clean = std::max(worst_clean, std::abs(a->frequency_hz - f) / f);
    worst_noisy = std::max(worst_noisy, std::abs(b->frequency_hz - f) / f);
  }
  report(3, all_found && worst_clean <= 0.005 && worst_noisy <= 0.01,
         fmt("autocorrelation on 25 sines 200-4800 Hz: worst error %.3f%% clean, %.3f%% at 20 dB SNR",
             100.0 * worst_clean, 100.0 * worst_noisy));
}

std::vector<DetectionRecord> random_log(std::mt19937_64& gen) {
  std::uniform_int_distribution<std::size_t> count(1, 1000);
  std::uniform_int_distribution<int> device(0, 4);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<std::int64_t> t(0, 30'000);
  std::uniform_int_distribution<std::int64_t> latency(-5, 900);
  std::vector<DetectionRecord> out(count(gen));
  for (auto& r : out) {
    r.media = coin(gen) ? Media::kAudio : Media::kVideo;
    r.device = device(gen) == 0 ? "presenter" : "v" + std::to_string(device(gen));
    r.playout_ts = Timestamp{1'700'000'000'000 + t(gen)};
    r.emission_ts = Timestamp{r.playout_ts.ms - latency(gen)};
    r.slot = 1 + static_cast<int>(t(gen) / 6000);
  }
  sort_records(out);
  return out;
}

void metric_oracles() {
  std::mt19937_64 gen(4242);
  std::size_t mismatches = 0;
  std::size_t comparisons = 0;
  auto check = [&](bool equal) {
    ++comparisons;
    if (!equal) ++mismatches;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto samples = latencies_from_log(random_log(gen)).samples;

    const auto stats = slot_stats(samples);
    const auto want = oracle::slot_stats(samples);
    check(stats.size() == want.size());
    for (std::size_t i = 0; i < std::min(stats.size(), want.size()); ++i) {
      check(stats[i].slot == want[i].slot && stats[i].media == want[i].media &&
            stats[i].mean_ms == want[i].mean && stats[i].std_ms == want[i].std &&
            stats[i].n == want[i].n);
    }

    for (Media media : {Media::kVideo, Media::kAudio}) {
      const auto r = inter_device_asynchrony(epoch_device_latency(samples, 1000.0, media), media);
      const auto o = oracle::asynchrony(samples, 1000.0, media);
      check(r.series.size() == o.series.size());
      for (std::size_t i = 0; i < std::min(r.series.size(), o.series.size()); ++i) {
        check(r.series[i].second == o.series[i]);
      }
      check(r.max_ms == o.max && r.mean_ms == o.mean);
    }

    std::vector<LatencySample> video, audio;
    for (const auto& s : samples) (s.media == Media::kVideo ? video : audio).push_back(s);
    const auto skew = intra_media_skew(video, audio, 1000.0);
    const auto want_skew = oracle::skew(video, audio, 1000.0);
    check(skew.size() == want_skew.size());
    std::vector<double> series;
    for (std::size_t i = 0; i < std::min(skew.size(), want_skew.size()); ++i) {
      check(skew[i].epoch == std::get<0>(want_skew[i]) && skew[i].device == std::get<1>(want_skew[i]) &&
            skew[i].skew_ms == std::get<2>(want_skew[i]));
      series.push_back(skew[i].skew_ms);
    }
    if (!series.empty()) {
      const auto box = boxplot_stats(series);
      const auto o = oracle::box(series);
      check(box.median == o.median && box.q1 == o.q1 && box.q3 == o.q3 &&
            box.whisker_low == o.lo && box.whisker_high == o.hi && box.outliers == o.outliers);
    }
  }
  report(4, mismatches == 0,
         fmt("metric oracles on 100 random logs: %zu/%zu comparisons exact", comparisons - mismatches,
             comparisons));
}

void constant_delay() {
  NetworkProfile p;
  p.name = "constant";
  p.base_one_way_ms = 100.0;  // two hops: presenter -> edge -> viewer
  SessionScenario sc = default_scenario(p);
  sc.duration_s = 60.0;
  for (int i = 1; i < 5; ++i) sc.nodes[i].join_s = 10.0 * i;
  sc.clocks.ntp_sigma_ms = 0.0;
  sc.pipeline = PipelineModel{0.0, 0.0, 0.0, 0.0, false, 0.0};
  const DetectionLog log = run_scenario(sc, 42);
  double vmin = 1e9, vmax = -1e9, amin = 1e9, amax = -1e9;
  std::size_t nv = 0, na = 0;
  for (const auto& r : log.records) {
    const double l = static_cast<double>(r.playout_ts.ms - r.emission_ts.ms);
    if (r.media == Media::kVideo) {
      vmin = std::min(vmin, l);
      vmax = std::max(vmax, l);
      ++nv;
    } else {
      amin = std::min(amin, l);
      amax = std::max(amax, l);
      ++na;
    }
  }
  const bool ok = nv > 0 && na > 0 && vmin >= 200.0 && vmax <= 243.4 && amin >= 200.0 && amax <= 235.0;
  report(5, ok,
         fmt("constant 200 ms delay at 30 fps: video [%.0f, %.0f] over %zu, audio [%.0f, %.0f] over %zu",
             vmin, vmax, nv, amin, amax, na));
}

struct ProfileRun {
  double video_mean = 0.0;
  double audio_mean = 0.0;
  double async_max = 0.0;
  double abs_skew_median = 0.0;
  std::size_t unacceptable_outliers = 0;
  double seconds = 0.0;
};

ProfileRun run_profile(const char* name) {
  ProfileRun out;
  const auto t0 = Clock::now();
  const SessionScenario sc = default_scenario(*builtin_profile(name));
  const DetectionLog log = run_scenario(sc, 42);
  const auto samples = latencies_from_log(log.records).samples;
  std::vector<LatencySample> video, audio;
  for (const auto& s : samples) (s.media == Media::kVideo ? video : audio).push_back(s);
  for (const auto& s : video) out.video_mean += s.latency_ms;
  for (const auto& s : audio) out.audio_mean += s.latency_ms;
  out.video_mean /= static_cast<double>(video.size());
  out.audio_mean /= static_cast<double>(audio.size());
  out.async_max = inter_device_asynchrony(epoch_device_latency(video, 1000.0, Media::kVideo)).max_ms;
  std::vector<double> signed_skew, abs_skew;
  for (const auto& s : intra_media_skew(video, audio, 1000.0)) {
    signed_skew.push_back(s.skew_ms);
    abs_skew.push_back(std::abs(s.skew_ms));
  }
  out.abs_skew_median = boxplot_stats(abs_skew).median;
  for (double v : boxplot_stats(signed_skew).outliers) {
    if (classify_lip_sync(std::abs(v)) == LipSync::kUnacceptable) ++out.unacceptable_outliers;
  }
  out.seconds = seconds_since(t0);
  return out;
}

void calibrated_profiles() {
  const ProfileRun eth = run_profile("ethernet");
  const ProfileRun g5 = run_profile("fiveg");
  const ProfileRun wifi = run_profile("wifi");

  const bool ordering = eth.video_mean < g5.video_mean && g5.video_mean < wifi.video_mean &&
                        eth.audio_mean < g5.audio_mean && g5.audio_mean < wifi.audio_mean;
  const bool asynchrony = eth.async_max < 80.0 && g5.async_max < 80.0 && wifi.async_max > 300.0;
  const bool skew = wifi.unacceptable_outliers > 0 && eth.abs_skew_median < 100.0 &&
                    g5.abs_skew_median < 50.0;
  auto near = [](double got, double target) { return std::abs(got - target) <= 0.15 * target; };
  const bool means = near(eth.video_mean, 227.54) && near(wifi.video_mean, 362.46) &&
                     near(g5.video_mean, 282.67) && near(eth.audio_mean, 185.22) &&
                     near(wifi.audio_mean, 324.59) && near(g5.audio_mean, 304.17);
  const bool fast = eth.seconds < 60.0 && g5.seconds < 60.0 && wifi.seconds < 60.0;

  std::string detail = fmt(
      "ordering %s; async max %.1f/%.1f/%.1f ms; |skew| median %.1f/%.1f ms, wifi unacceptable "
      "outliers %zu; video means %.1f/%.1f/%.1f, audio means %.1f/%.1f/%.1f (ethernet/fiveg/wifi); "
      "runtime %.2f/%.2f/%.2f s",
      ordering ? "ok" : "violated", eth.async_max, g5.async_max, wifi.async_max, eth.abs_skew_median,
      g5.abs_skew_median, wifi.unacceptable_outliers, eth.video_mean, g5.video_mean, wifi.video_mean,
      eth.audio_mean, g5.audio_mean, wifi.audio_mean, eth.seconds, g5.seconds, wifi.seconds);
  report(6, ordering && asynchrony && skew && means && fast, "default scenario per profile: " + detail);
}

void lip_sync() {
  const std::vector<std::pair<double, LipSync>> cases = {{79.0, LipSync::kUnnoticeable},
                                                         {80.0, LipSync::kTolerable},
                                                         {120.0, LipSync::kTolerable},
                                                         {160.0, LipSync::kTolerable},
                                                         {161.0, LipSync::kUnacceptable}};
  bool ok = true;
  std::string detail;
  for (const auto& [ms, want] : cases) {
    const LipSync got = classify_lip_sync(ms);
    ok = ok && got == want;
    detail += fmt("%.0f->%s ", ms, to_string(got));
  }
  report(7, ok, "lip-sync classes " + detail);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "xrprobe_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  bool identical = true;
  for (const char* profile : {"ethernet", "wifi"}) {
    const fs::path a = root / (std::string(profile) + "_a");
    const fs::path b = root / (std::string(profile) + "_b");
    const bool ran = cli({"simulate", "--profile", profile, "--seed", "42", "--out", a.string()}) == 0 &&
                     cli({"simulate", "--profile", profile, "--seed", "42", "--out", b.string()}) == 0;
    const std::string log = slurp(a / "detections.jsonl");
    identical = identical && ran && !log.empty() && log == slurp(b / "detections.jsonl") &&
                slurp(a / "diagnostics.json") == slurp(b / "diagnostics.json");
  }

  // Physical mode on a short session: every symbolic record should be
  // found by the media detectors within the quantization bound.
  std::ofstream(root / "short.json")
      << R"({"profiles": "ethernet", "duration_s": 20, "joins_s": [4, 8, 12, 16]})";
  const fs::path phys = root / "physical";
  const bool ran = cli({"simulate", "--scenario", (root / "short.json").string(), "--seed", "42",
                        "--physical", "--out", phys.string()}) == 0;
  std::size_t total = 0, agree = 0;
  if (ran) {
    std::map<std::tuple<std::string, Media, std::int64_t>, std::int64_t> detected;
    for (const auto& r : read_log(phys / "physical" / "detections.jsonl")) {
      detected[{r.device, r.media, r.emission_ts.ms}] = r.playout_ts.ms;
    }
    const double video_bound = kBeaconIntervalMs + 1000.0 / 30.0;
    const double audio_bound = 512.0 * 1000.0 / kDefaultSampleRate + ToneSchedule{}.ramp_ms;
    for (const auto& r : read_log(phys / "detections.jsonl")) {
      ++total;
      auto it = detected.find({r.device, r.media, r.emission_ts.ms});
      if (it == detected.end()) continue;
      const double bound = r.media == Media::kVideo ? video_bound : audio_bound;
      if (std::abs(static_cast<double>(it->second - r.playout_ts.ms)) <= bound) ++agree;
    }
  }
  const double share = total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
  report(8, identical && ran && share >= 0.99,
         fmt("seed-42 reruns byte-identical: %s; physical vs symbolic agreement %zu/%zu (%.2f%%)",
             identical ? "yes" : "no", agree, total, 100.0 * share));
  fs::remove_all(root);
}

}  // namespace

int main() {
  video_roundtrip();
  audio_loopback();
  pitch_accuracy();
  metric_oracles();
  constant_delay();
  calibrated_profiles();
  lip_sync();
  determinism();
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "PASSED", failures);
  return failures ? 1 : 0;
}
