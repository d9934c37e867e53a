#include "xrprobe/quality.hpp"

#include <algorithm>

#include "xrprobe/error.hpp"

namespace xrprobe {

void QualityPolicy::validate() const {
  if (levels.empty()) throw ConfigError("quality policy needs at least one level");
  if (!(step_up_threshold_ms < step_down_threshold_ms)) {
    throw ConfigError("step_up_threshold_ms must be below step_down_threshold_ms");
  }
  if (dwell_s < 0.0) throw ConfigError("dwell_s must be non-negative");
}

const char* to_string(QualityAction action) {
  switch (action) {
    case QualityAction::kStepUp:
      return "StepUp";
    case QualityAction::kStepDown:
      return "StepDown";
    case QualityAction::kHold:
      return "Hold";
  }
  return "Hold";
}

QualityDecision adapt_quality(double window_mean_m2p_ms, std::size_t current_level,
                              const QualityPolicy& policy, double dwell_elapsed_s) {
  const std::size_t top = policy.levels.empty() ? 0 : policy.levels.size() - 1;
  const std::size_t level = std::min(current_level, top);
  QualityDecision hold{QualityAction::kHold, level};
  if (dwell_elapsed_s < policy.dwell_s) return hold;
  if (window_mean_m2p_ms > policy.step_down_threshold_ms && level > 0) {
    return {QualityAction::kStepDown, level - 1};
  }
  if (window_mean_m2p_ms < policy.step_up_threshold_ms && level < top) {
    return {QualityAction::kStepUp, level + 1};
  }
  return hold;
}

}  // namespace xrprobe
