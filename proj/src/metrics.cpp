#include "xrprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace xrprobe {

LatencySeries latencies_from_log(const std::vector<DetectionRecord>& records) {
  LatencySeries out;
  out.samples.reserve(records.size());
  for (const auto& r : records) {
    const std::int64_t latency = r.playout_ts.ms - r.emission_ts.ms;
    if (latency < 0) {
      ++out.clock_skew_suspected;
      continue;
    }
    out.samples.push_back({r.device, r.media, r.playout_ts, static_cast<double>(latency), r.slot});
  }
  return out;
}

std::vector<SlotStat> slot_stats(const std::vector<LatencySample>& samples) {
  std::map<std::pair<int, Media>, std::vector<double>> groups;
  for (const auto& s : samples) groups[{s.slot, s.media}].push_back(s.latency_ms);

  std::vector<SlotStat> out;
  for (const auto& [key, values] : groups) {
    double sum = 0.0;
    for (double v : values) sum += v;
    const double n = static_cast<double>(values.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.push_back({key.first, key.second, mean, std::sqrt(ss / n), values.size()});
  }
  return out;
}

std::int64_t epoch_of(Timestamp t, double epoch_width_ms) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(t.ms) / epoch_width_ms));
}

EpochLatencies epoch_device_latency(const std::vector<LatencySample>& samples,
                                    double epoch_width_ms, std::optional<Media> media,
                                    EpochReduce reduce) {
  if (!(epoch_width_ms > 0.0)) throw std::invalid_argument("epoch width must be positive");
  std::map<EpochKey, std::pair<double, std::size_t>> acc;
  for (const auto& s : samples) {
    if (media && s.media != *media) continue;
    const EpochKey key{epoch_of(s.t, epoch_width_ms), s.device};
    auto [it, fresh] = acc.try_emplace(key, s.latency_ms, 1);
    if (fresh) continue;
    auto& [value, count] = it->second;
    if (reduce == EpochReduce::kMin) {
      value = std::min(value, s.latency_ms);
    } else {
      value += s.latency_ms;
    }
    ++count;
  }
  EpochLatencies out;
  for (const auto& [key, entry] : acc) {
    out.emplace_hint(out.end(), key,
                     reduce == EpochReduce::kMin ? entry.first
                                                 : entry.first / static_cast<double>(entry.second));
  }
  return out;
}

AsynchronyReport inter_device_asynchrony(const EpochLatencies& latencies, Media media,
                                         double epoch_width_ms) {
  AsynchronyReport report;
  report.media = media;
  report.epoch_width_ms = epoch_width_ms;
  auto it = latencies.begin();
  while (it != latencies.end()) {
    const std::int64_t epoch = it->first.first;
    auto last = it;
    double lowest = it->second;
    std::size_t n = 0;
    for (; last != latencies.end() && last->first.first == epoch; ++last, ++n) {
      lowest = std::min(lowest, last->second);
    }
    double sum = 0.0;
    for (auto j = it; j != last; ++j) sum += j->second - lowest;
    report.series.emplace_back(epoch, sum / static_cast<double>(n));
    it = last;
  }
  if (!report.series.empty()) {
    double sum = 0.0;
    for (const auto& [epoch, a] : report.series) {
      report.max_ms = std::max(report.max_ms, a);
      sum += a;
    }
    report.mean_ms = sum / static_cast<double>(report.series.size());
  }
  return report;
}

std::vector<SkewSample> intra_media_skew(const std::vector<LatencySample>& video,
                                         const std::vector<LatencySample>& audio,
                                         double epoch_width_ms, EpochReduce reduce) {
  const EpochLatencies v = epoch_device_latency(video, epoch_width_ms, std::nullopt, reduce);
  const EpochLatencies a = epoch_device_latency(audio, epoch_width_ms, std::nullopt, reduce);
  std::vector<SkewSample> out;
  for (const auto& [key, lv] : v) {
    auto match = a.find(key);
    if (match == a.end()) continue;
    out.push_back({key.second, key.first, lv - match->second});
  }
  return out;
}

const char* to_string(LipSync level) {
  switch (level) {
    case LipSync::kUnnoticeable: return "unnoticeable";
    case LipSync::kTolerable: return "tolerable";
    case LipSync::kUnacceptable: return "unacceptable";
  }
  return "?";
}

LipSync classify_lip_sync(double abs_skew_ms) {
  if (abs_skew_ms < 80.0) return LipSync::kUnnoticeable;
  if (abs_skew_ms <= 160.0) return LipSync::kTolerable;
  return LipSync::kUnacceptable;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats boxplot_stats(std::vector<double> series) {
  if (series.empty()) throw std::invalid_argument("boxplot of an empty series");
  std::sort(series.begin(), series.end());
  BoxStats box;
  box.q1 = quantile_sorted(series, 0.25);
  box.median = quantile_sorted(series, 0.5);
  box.q3 = quantile_sorted(series, 0.75);
  const double iqr = box.q3 - box.q1;
  const double lo_fence = box.q1 - 1.5 * iqr;
  const double hi_fence = box.q3 + 1.5 * iqr;
  bool any = false;
  for (double v : series) {
    if (v < lo_fence || v > hi_fence) {
      box.outliers.push_back(v);
      continue;
    }
    if (!any) box.whisker_low = v;
    box.whisker_high = v;
    any = true;
  }
  return box;
}

}  // namespace xrprobe
