#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <type_traits>
#include <vector>

namespace xrprobe {

struct PitchOptions {
  double min_hz = 100.0;
  double max_hz = 6000.0;
  // Minimum normalized autocorrelation accepted as a period peak.
  double threshold = 0.8;
  // Windows quieter than this (RMS relative to full scale) are silence.
  double silence_dbfs = -40.0;
  // Shortest window the estimator accepts.
  Eigen::Index min_window = 1024;
};

struct PitchEstimate {
  double frequency_hz;
  double confidence;
};

template <typename Scalar>
constexpr double full_scale() {
  if constexpr (std::is_integral_v<Scalar>) {
    return static_cast<double>(std::numeric_limits<Scalar>::max());
  } else {
    return 1.0;
  }
}

inline double rms_dbfs(double rms, double full) {
  return rms > 0.0 ? 20.0 * std::log10(rms / full)
                   : -std::numeric_limits<double>::infinity();
}

// Normalized autocorrelation pitch estimate of a mono window.
//
// r(lag) = <x[0..N-lag), x[lag..N)> / sqrt(|x[0..N-lag)|^2 |x[lag..N)|^2).
// The period is the first local maximum with r >= threshold that follows
// the first zero crossing of r, refined by a parabola through its two
// neighbours. Returns nullopt for silence, short windows, or when no lag
// in [rate / max_hz, rate / min_hz] qualifies.
template <typename Derived>
std::optional<PitchEstimate> estimate_frequency(
    const Eigen::MatrixBase<Derived>& window, double sample_rate,
    const PitchOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = window.size();
  if (n < options.min_window || n < 4) return std::nullopt;

  const Eigen::VectorXd x = window.derived().template cast<double>();
  const double energy = x.squaredNorm();
  const double rms = std::sqrt(energy / static_cast<double>(n));
  if (rms_dbfs(rms, full_scale<Scalar>()) < options.silence_dbfs) {
    return std::nullopt;
  }

  const auto lag_lo = static_cast<Eigen::Index>(
      std::floor(sample_rate / options.max_hz));
  const Eigen::Index lag_hi = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(std::ceil(sample_rate / options.min_hz)),
      n / 2);

  // prefix[i] = sum of x[0..i)^2, so head/tail energies are O(1) per lag.
  Eigen::VectorXd prefix(n + 1);
  prefix(0) = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) + x(i) * x(i);

  auto corr = [&](Eigen::Index lag) {
    const Eigen::Index len = n - lag;
    double cross = x.head(len).dot(x.tail(len));
    double head = prefix(len);
    double tail = prefix(n) - prefix(lag);
    double denom = std::sqrt(head * tail);
    return denom > 0.0 ? cross / denom : 0.0;
  };

  std::vector<double> r(static_cast<std::size_t>(lag_hi + 2), 0.0);
  r[0] = 1.0;
  bool crossed = false;
  for (Eigen::Index lag = 1; lag <= lag_hi + 1 && lag < n; ++lag) {
    r[lag] = corr(lag);
    if (!crossed) {
      crossed = r[lag] <= 0.0;
      continue;
    }
    const Eigen::Index peak = lag - 1;
    if (peak < std::max<Eigen::Index>(lag_lo, 1) || peak > lag_hi) continue;
    if (r[peak] >= options.threshold && r[peak] >= r[peak - 1] &&
        r[peak] > r[lag]) {
      const double left = r[peak - 1];
      const double mid = r[peak];
      const double right = r[lag];
      const double curvature = left - 2.0 * mid + right;
      double shift = curvature != 0.0 ? 0.5 * (left - right) / curvature : 0.0;
      shift = std::clamp(shift, -0.5, 0.5);
      const double refined_lag = static_cast<double>(peak) + shift;
      const double height = mid - 0.25 * (left - right) * shift;
      return PitchEstimate{sample_rate / refined_lag,
                           std::clamp(height, 0.0, 1.0)};
    }
  }
  return std::nullopt;
}

}  // namespace xrprobe
