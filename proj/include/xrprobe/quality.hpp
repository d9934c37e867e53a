#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace xrprobe {

// Hysteresis policy for stepping stream quality on monitored M2P latency.
// Levels are ordered lowest quality first.
struct QualityPolicy {
  std::vector<std::string> levels = {"low", "med", "high"};
  double step_down_threshold_ms = 400.0;
  double step_up_threshold_ms = 150.0;
  double dwell_s = 10.0;

  // Throws ConfigError unless step_up < step_down, levels non-empty and
  // dwell >= 0.
  void validate() const;
};

enum class QualityAction { kStepUp, kStepDown, kHold };

const char* to_string(QualityAction action);

struct QualityDecision {
  QualityAction action = QualityAction::kHold;
  std::size_t target_level = 0;

  friend bool operator==(const QualityDecision&, const QualityDecision&) = default;
};

QualityDecision adapt_quality(double window_mean_m2p_ms, std::size_t current_level,
                              const QualityPolicy& policy, double dwell_elapsed_s);

}  // namespace xrprobe
