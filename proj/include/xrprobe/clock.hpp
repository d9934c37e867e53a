#pragma once

#include <string>

#include "xrprobe/rng.hpp"
#include "xrprobe/timestamp.hpp"

namespace xrprobe {

// Linear clock model: local(t) = t + offset + drift * 1e-6 * (t - t0).
// All times are milliseconds; true time is the simulator's reference.
struct VirtualClock {
  std::string node_id;
  double offset_ms = 0.0;
  double drift_ppm = 0.0;
  double t0_ms = 0.0;
};

// Unrounded local reading. No anchor check.
double local_time(const VirtualClock& clock, double true_ms);

// Inverse of local_time.
double true_time_at(const VirtualClock& clock, double local_ms);

// Throws TimeBeforeAnchor when true_ms < clock.t0_ms.
Timestamp local_now(const VirtualClock& clock, double true_ms);

// Re-draws the offset from N(0, sigma_ms) and re-anchors the clock at
// sync_true_ms. Drift is left alone.
VirtualClock ntp_sync(const VirtualClock& clock, double sigma_ms, Rng& rng,
                      double sync_true_ms);

}  // namespace xrprobe
