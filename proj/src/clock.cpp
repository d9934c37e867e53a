#include "xrprobe/clock.hpp"

#include <cmath>
#include <string>

#include "xrprobe/error.hpp"

namespace xrprobe {

double local_time(const VirtualClock& clock, double true_ms) {
  return true_ms + clock.offset_ms +
         clock.drift_ppm * 1e-6 * (true_ms - clock.t0_ms);
}

double true_time_at(const VirtualClock& clock, double local_ms) {
  double rate = 1.0 + clock.drift_ppm * 1e-6;
  return clock.t0_ms + (local_ms - clock.t0_ms - clock.offset_ms) / rate;
}

Timestamp local_now(const VirtualClock& clock, double true_ms) {
  if (true_ms < clock.t0_ms) {
    throw TimeBeforeAnchor("clock '" + clock.node_id + "' read at " +
                           std::to_string(true_ms) + " ms, before anchor " +
                           std::to_string(clock.t0_ms) + " ms");
  }
  return Timestamp{std::llround(local_time(clock, true_ms))};
}

VirtualClock ntp_sync(const VirtualClock& clock, double sigma_ms, Rng& rng,
                      double sync_true_ms) {
  VirtualClock synced = clock;
  synced.offset_ms = sigma_ms > 0.0 ? rng.normal(0.0, sigma_ms) : 0.0;
  synced.t0_ms = sync_true_ms;
  return synced;
}

}  // namespace xrprobe
