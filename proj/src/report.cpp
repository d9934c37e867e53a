#include "xrprobe/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "xrprobe/error.hpp"
#include "xrprobe/log_io.hpp"

namespace xrprobe {

namespace fs = std::filesystem;

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf, end);
}

AnalysisReport analyze(const DetectionLog& log, const AnalysisOptions& options) {
  AnalysisReport report;
  report.options = options;
  report.records = log.records.size();
  report.diagnostics = log.diagnostics;

  LatencySeries series = latencies_from_log(log.records);
  report.clock_skew_suspected = series.clock_skew_suspected;

  std::vector<LatencySample> video;
  std::vector<LatencySample> audio;
  std::map<std::pair<std::string, Media>, DeviceSummary> devices;
  for (const auto& s : series.samples) {
    (s.media == Media::kVideo ? video : audio).push_back(s);
    auto [it, fresh] = devices.try_emplace({s.device, s.media},
                                           DeviceSummary{s.device, s.media, s.latency_ms, 0.0,
                                                         s.latency_ms, 0});
    DeviceSummary& d = it->second;
    d.min_ms = std::min(d.min_ms, s.latency_ms);
    d.max_ms = std::max(d.max_ms, s.latency_ms);
    d.mean_ms += s.latency_ms;
    ++d.n;
  }
  for (auto& [key, d] : devices) {
    d.mean_ms /= static_cast<double>(d.n);
    report.devices.push_back(d);
  }
  for (const auto& [media, samples] : {std::pair{Media::kVideo, &video}, std::pair{Media::kAudio, &audio}}) {
    if (samples->empty()) continue;
    double sum = 0.0;
    for (const auto& s : *samples) sum += s.latency_ms;
    report.media[media] = {samples->size(), sum / static_cast<double>(samples->size())};
  }

  report.slots = slot_stats(series.samples);
  report.video_epochs = epoch_device_latency(video, options.epoch_ms, Media::kVideo, options.reduce);
  report.audio_epochs = epoch_device_latency(audio, options.epoch_ms, Media::kAudio, options.reduce);
  report.video_asynchrony = inter_device_asynchrony(report.video_epochs, Media::kVideo, options.epoch_ms);
  report.audio_asynchrony = inter_device_asynchrony(report.audio_epochs, Media::kAudio, options.epoch_ms);

  SkewSummary& skew = report.skew;
  skew.samples = intra_media_skew(video, audio, options.epoch_ms, options.reduce);
  std::map<std::string, std::vector<double>> by_device;
  std::vector<double> all;
  std::vector<double> abs_all;
  for (const auto& s : skew.samples) {
    by_device[s.device].push_back(s.skew_ms);
    all.push_back(s.skew_ms);
    abs_all.push_back(std::abs(s.skew_ms));
    ++skew.classes[classify_lip_sync(std::abs(s.skew_ms))];
  }
  for (auto& [device, values] : by_device) skew.per_device.emplace(device, boxplot_stats(values));
  if (!all.empty()) {
    skew.signed_all = boxplot_stats(all);
    skew.abs_all = boxplot_stats(abs_all);
  }
  return report;
}

namespace {

nlohmann::ordered_json box_json(const BoxStats& b) {
  return {{"median", b.median},
          {"q1", b.q1},
          {"q3", b.q3},
          {"whisker_low", b.whisker_low},
          {"whisker_high", b.whisker_high},
          {"outliers", b.outliers}};
}

nlohmann::ordered_json asynchrony_json(const AsynchronyReport& a) {
  return {{"max_ms", a.max_ms}, {"mean_ms", a.mean_ms}, {"epochs", a.series.size()}};
}

class CsvFile {
 public:
  explicit CsvFile(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  fs::path path_;
  std::ofstream out_;
};

}  // namespace

nlohmann::ordered_json to_json(const AnalysisReport& r) {
  nlohmann::ordered_json j;
  j["epoch_ms"] = r.options.epoch_ms;
  j["epoch_reduce"] = r.options.reduce == EpochReduce::kMin ? "min" : "mean";
  j["records"] = r.records;
  j["clock_skew_suspected"] = r.clock_skew_suspected;
  j["diagnostics"] = to_json(r.diagnostics);

  nlohmann::ordered_json latency = nlohmann::ordered_json::object();
  for (const auto& [media, summary] : r.media) {
    latency[to_string(media)] = {{"n", summary.n}, {"mean_ms", summary.mean_ms}};
  }
  j["latency"] = latency;

  nlohmann::ordered_json slots = nlohmann::ordered_json::array();
  for (const auto& s : r.slots) {
    slots.push_back({{"slot", s.slot},
                     {"media", to_string(s.media)},
                     {"mean_ms", s.mean_ms},
                     {"std_ms", s.std_ms},
                     {"n", s.n}});
  }
  j["slots"] = slots;

  nlohmann::ordered_json devices = nlohmann::ordered_json::array();
  for (const auto& d : r.devices) {
    devices.push_back({{"device", d.device},
                       {"media", to_string(d.media)},
                       {"min_ms", d.min_ms},
                       {"mean_ms", d.mean_ms},
                       {"max_ms", d.max_ms},
                       {"n", d.n}});
  }
  j["devices"] = devices;

  nlohmann::ordered_json inter;
  inter["video"] = asynchrony_json(r.video_asynchrony);
  inter["audio"] = asynchrony_json(r.audio_asynchrony);
  inter["sync_target_ms"] = r.options.sync_target_ms;
  inter["video_within_target"] = r.video_asynchrony.max_ms <= r.options.sync_target_ms;
  j["inter_device_asynchrony"] = inter;

  nlohmann::ordered_json intra;
  intra["samples"] = r.skew.samples.size();
  if (r.skew.signed_all) intra["skew_ms"] = box_json(*r.skew.signed_all);
  if (r.skew.abs_all) intra["abs_skew_ms"] = box_json(*r.skew.abs_all);
  nlohmann::ordered_json per_device = nlohmann::ordered_json::object();
  for (const auto& [device, box] : r.skew.per_device) per_device[device] = box_json(box);
  intra["per_device"] = per_device;
  nlohmann::ordered_json classes;
  for (LipSync level : {LipSync::kUnnoticeable, LipSync::kTolerable, LipSync::kUnacceptable}) {
    auto it = r.skew.classes.find(level);
    classes[to_string(level)] = it == r.skew.classes.end() ? 0 : it->second;
  }
  intra["classes"] = classes;
  j["intra_media_skew"] = intra;
  return j;
}

void write_report(const AnalysisReport& r, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    if (!out) throw IoError("cannot open " + (dir / "report.json").string() + " for writing");
    out << to_json(r).dump(2) << '\n';
    if (!out) throw IoError("failed writing report.json");
  }

  const double width = r.options.epoch_ms;
  auto epoch_start = [width](std::int64_t epoch) { return static_cast<double>(epoch) * width; };

  CsvFile epochs(dir / "latency_epochs.csv");
  epochs.row("epoch_start_ms", "device", "media", "latency_ms");
  for (const auto& [media, table] : {std::pair{Media::kVideo, &r.video_epochs},
                                     std::pair{Media::kAudio, &r.audio_epochs}}) {
    for (const auto& [key, latency] : *table) {
      epochs.row(epoch_start(key.first), key.second, to_string(media), latency);
    }
  }
  epochs.close();

  CsvFile asynchrony(dir / "asynchrony.csv");
  asynchrony.row("epoch_start_ms", "media", "asynchrony_ms");
  for (const auto* a : {&r.video_asynchrony, &r.audio_asynchrony}) {
    for (const auto& [epoch, value] : a->series) {
      asynchrony.row(epoch_start(epoch), to_string(a->media), value);
    }
  }
  asynchrony.close();

  CsvFile slots(dir / "slot_stats.csv");
  slots.row("slot", "media", "mean_ms", "std_ms", "n");
  for (const auto& s : r.slots) slots.row(s.slot, to_string(s.media), s.mean_ms, s.std_ms, s.n);
  slots.close();

  CsvFile devices(dir / "devices.csv");
  devices.row("device", "media", "min_ms", "mean_ms", "max_ms", "n");
  for (const auto& d : r.devices) {
    devices.row(d.device, to_string(d.media), d.min_ms, d.mean_ms, d.max_ms, d.n);
  }
  devices.close();

  CsvFile skew(dir / "skew.csv");
  skew.row("epoch_start_ms", "device", "skew_ms", "class");
  for (const auto& s : r.skew.samples) {
    skew.row(epoch_start(s.epoch), s.device, s.skew_ms,
             to_string(classify_lip_sync(std::abs(s.skew_ms))));
  }
  skew.close();
}

}  // namespace xrprobe
