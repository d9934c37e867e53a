#include <gtest/gtest.h>

#include <fftw3.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "xrprobe/audio_beacon.hpp"
#include "xrprobe/error.hpp"
#include "xrprobe/wav.hpp"

using namespace xrprobe;

namespace {

constexpr int kRate = 48000;

Eigen::VectorXd sine(double f, Eigen::Index n, double amp = 0.5, double phase = 0.3) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / kRate + phase);
  }
  return x;
}

// Index of the largest |X[k]| of a real signal, via FFTW.
int fft_peak_bin(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x.data(), x.data() + n);
  std::vector<fftw_complex> out(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  int best = 0;
  double best_mag = -1.0;
  for (int k = 1; k <= n / 2; ++k) {
    const double mag = std::hypot(out[k][0], out[k][1]);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST(SlotFrequency, Examples) {
  ToneSchedule s;
  EXPECT_DOUBLE_EQ(slot_frequency(s, 0), 600.0);
  EXPECT_DOUBLE_EQ(slot_frequency(s, 31), 4320.0);
  EXPECT_DOUBLE_EQ(slot_frequency(s, 32), 600.0);
  EXPECT_EQ(s.ambiguity_window_ms(), 3200);
}

TEST(Synthesize, LengthAndAmplitude) {
  ToneSchedule s;
  const PcmBuffer pcm = synthesize(s, 0, 10, kRate);
  EXPECT_EQ(pcm.samples.size(), 48000);
  EXPECT_EQ(pcm.sample_rate, kRate);
  EXPECT_LE(pcm.samples.cast<int>().cwiseAbs().maxCoeff(), 16384);
  EXPECT_GT(pcm.samples.cast<int>().cwiseAbs().maxCoeff(), 16000);
}

TEST(Synthesize, SilenceBetweenPulses) {
  ToneSchedule s;
  const PcmBuffer pcm = synthesize(s, 0, 3, kRate);
  // 80 ms tone then 20 ms gap in each 100 ms slot.
  for (int slot = 0; slot < 3; ++slot) {
    const auto gap = pcm.samples.segment(slot * 4800 + 3841, 4800 - 3841);
    EXPECT_EQ(gap.cast<int>().cwiseAbs().maxCoeff(), 0) << slot;
  }
}

TEST(Synthesize, NyquistViolation) {
  ToneSchedule s;
  EXPECT_THROW(synthesize(s, 0, 1, 8000), NyquistViolation);
  EXPECT_NO_THROW(synthesize(s, 0, 1, 9000));
}

TEST(Synthesize, SpectralPeakAtScheduleFrequency) {
  ToneSchedule s;
  const PcmBuffer pcm = synthesize(s, 5, 32, kRate);
  const Eigen::Index n = 3840;  // the 80 ms pulse
  const double bin_hz = static_cast<double>(kRate) / n;
  for (int i = 0; i < 32; ++i) {
    const Eigen::VectorXd x = pcm.samples.segment(i * 4800, n).cast<double>();
    const double f = slot_frequency(s, 5 + i);
    EXPECT_LE(std::abs(fft_peak_bin(x) * bin_hz - f), bin_hz) << f;
  }
}

TEST(EstimateFrequency, PureSine1000) {
  const Eigen::VectorXd x = sine(1000.0, 2048);
  auto e = estimate_frequency(x, kRate, PitchOptions{});
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->frequency_hz, 1000.0, 5.0);
  EXPECT_GE(e->confidence, 0.8);
  EXPECT_LE(e->confidence, 1.0);
}

TEST(EstimateFrequency, SilenceIsNone) {
  EXPECT_FALSE(estimate_frequency(Eigen::VectorXd::Zero(2048), kRate, PitchOptions{}));
  EXPECT_FALSE(estimate_frequency(PcmSamples::Zero(2048), kRate, PitchOptions{}));
}

TEST(EstimateFrequency, BelowSilenceGateIsNone) {
  // -46 dBFS peak.
  EXPECT_FALSE(estimate_frequency(sine(1000.0, 2048, 0.005), kRate, PitchOptions{}));
}

TEST(EstimateFrequency, ShortWindowIsNone) {
  EXPECT_FALSE(estimate_frequency(sine(1000.0, 1023), kRate, PitchOptions{}));
}

TEST(EstimateFrequency, NoisySine440) {
  std::mt19937_64 gen(20);
  std::normal_distribution<double> noise(0.0, 0.5 / std::sqrt(2.0) / 10.0);  // 20 dB SNR
  Eigen::VectorXd x = sine(440.0, 2048);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += noise(gen);
  auto e = estimate_frequency(x, kRate, PitchOptions{});
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->frequency_hz, 440.0, 5.0);
}

TEST(EstimateFrequency, RelativeErrorAcrossBand) {
  for (double f = 200.0; f <= 4800.0; f += 37.0) {
    auto e = estimate_frequency(sine(f, 2048), kRate, PitchOptions{});
    ASSERT_TRUE(e) << f;
    EXPECT_LE(std::abs(e->frequency_hz - f) / f, 0.005) << f;
  }
}

TEST(EstimateFrequency, Int16Input) {
  PcmBuffer pcm = quantize_pcm(sine(2500.0, 4096, 16000.0), kRate);
  auto e = estimate_frequency(pcm.samples.head(2048), kRate, PitchOptions{});
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->frequency_hz, 2500.0, 12.5);
}

TEST(ToneIndex, NearestWithinHalfDelta) {
  ToneSchedule s;
  EXPECT_EQ(tone_index(s, 960.0), 3);
  EXPECT_EQ(tone_index(s, 1017.0), 3);
  EXPECT_EQ(tone_index(s, 1025.0), 4);
  EXPECT_EQ(tone_index(s, 530.0), std::nullopt);
  EXPECT_EQ(tone_index(s, 4400.0), std::nullopt);
}

TEST(ResolveEmission, LatestMatchingSlot) {
  ToneSchedule s;
  s.epoch_ts = Timestamp{0};
  auto r = resolve_emission(s, 960.0, Timestamp{350});
  ASSERT_TRUE(std::holds_alternative<Timestamp>(r));
  EXPECT_EQ(std::get<Timestamp>(r), Timestamp{300});
}

TEST(ResolveEmission, ZeroLatencyEdge) {
  ToneSchedule s;
  s.epoch_ts = Timestamp{1700000000000};
  auto r = resolve_emission(s, 600.0, s.epoch_ts);
  ASSERT_TRUE(std::holds_alternative<Timestamp>(r));
  EXPECT_EQ(std::get<Timestamp>(r), s.epoch_ts);
}

TEST(ResolveEmission, ToleranceBoundary) {
  ToneSchedule s;
  s.epoch_ts = Timestamp{0};
  auto near = resolve_emission(s, 1017.0, Timestamp{350});
  ASSERT_TRUE(std::holds_alternative<Timestamp>(near));
  EXPECT_EQ(std::get<Timestamp>(near), Timestamp{300});
  // Out of band on either side of the alphabet.
  for (double f : {530.0, 4400.0}) {
    auto r = resolve_emission(s, f, Timestamp{5000});
    ASSERT_TRUE(std::holds_alternative<ToneError>(r)) << f;
    EXPECT_EQ(std::get<ToneError>(r), ToneError::kUnknownTone);
  }
}

TEST(ResolveEmission, AmbiguousBeforeFirstSlot) {
  ToneSchedule s;
  s.epoch_ts = Timestamp{1000};
  auto r = resolve_emission(s, slot_frequency(s, 5), Timestamp{1400});
  ASSERT_TRUE(std::holds_alternative<ToneError>(r));
  EXPECT_EQ(std::get<ToneError>(r), ToneError::kAmbiguous);
}

TEST(ResolveEmission, TrueSlotWithinAmbiguityWindow) {
  ToneSchedule s;
  s.epoch_ts = Timestamp{1700000000000};
  std::mt19937_64 gen(8);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t slot = static_cast<std::int64_t>(gen() % 100000);
    const std::int64_t latency = static_cast<std::int64_t>(gen() % s.ambiguity_window_ms());
    const Timestamp emission{s.epoch_ts.ms + slot * s.pulse_period_ms};
    auto r = resolve_emission(s, slot_frequency(s, slot), Timestamp{emission.ms + latency});
    ASSERT_TRUE(std::holds_alternative<Timestamp>(r));
    ASSERT_EQ(std::get<Timestamp>(r), emission);
  }
}

TEST(DetectPulses, Loopback) {
  ToneSchedule s;
  s.epoch_ts = Timestamp{1700000000000};
  const PcmBuffer pcm = synthesize(s, 0, 10, kRate);
  auto result = detect_pulses(pcm, linear_sample_clock(1700000000000.0, kRate), s, "p");
  ASSERT_EQ(result.detections.size(), 10u);
  const double bound = 512.0 * 1000.0 / kRate + s.ramp_ms;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& d = result.detections[i];
    EXPECT_EQ(d.emission_ts, Timestamp{s.epoch_ts.ms + static_cast<std::int64_t>(i) * 100});
    const double latency = static_cast<double>(d.playout_ts.ms - d.emission_ts.ms);
    EXPECT_GE(latency, 0.0);
    EXPECT_LE(latency, bound);
    EXPECT_LE(std::abs(d.frequency_hz - slot_frequency(s, i)), s.delta_hz / 2);
    EXPECT_EQ(d.device_id, "p");
  }
}

TEST(DetectPulses, SilenceIsEmpty) {
  PcmBuffer pcm;
  pcm.samples = PcmSamples::Zero(48000);
  ToneSchedule s;
  auto result = detect_pulses(pcm, linear_sample_clock(0.0, kRate), s);
  EXPECT_TRUE(result.detections.empty());
}

TEST(DetectPulses, KnownShift) {
  ToneSchedule s;
  s.epoch_ts = Timestamp{1700000000000};
  const PcmBuffer pcm = synthesize(s, 0, 20, kRate);
  // The recording starts playing 250 ms after the schedule epoch.
  auto result = detect_pulses(pcm, linear_sample_clock(1700000000250.0, kRate), s);
  ASSERT_EQ(result.detections.size(), 20u);
  for (const auto& d : result.detections) {
    EXPECT_NEAR(static_cast<double>(d.playout_ts.ms - d.emission_ts.ms), 250.0, 25.0);
  }
}

TEST(DetectPulses, RepeatedToneSplitsOnSilence) {
  ToneSchedule s;
  s.tone_count = 1;  // every slot carries f0
  s.pulse_period_ms = 200;  // gap longer than one analysis window
  s.epoch_ts = Timestamp{0};
  const PcmBuffer pcm = synthesize(s, 0, 8, kRate);
  auto result = detect_pulses(pcm, linear_sample_clock(0.0, kRate), s);
  ASSERT_EQ(result.detections.size(), 8u);
  for (std::size_t i = 1; i < result.detections.size(); ++i) {
    const auto gap = result.detections[i].onset_sample - result.detections[i - 1].onset_sample;
    EXPECT_GE(gap, s.pulse_period_ms * kRate / 2000);
  }
}

TEST(Wav, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "xrprobe_wav_roundtrip.wav";
  ToneSchedule s;
  const PcmBuffer pcm = synthesize(s, 3, 4, kRate);
  write_wav(path, pcm);
  const PcmBuffer back = read_wav(path);
  EXPECT_EQ(back.sample_rate, kRate);
  EXPECT_EQ(back.samples, pcm.samples);
  EXPECT_EQ(std::filesystem::file_size(path), 44u + 2u * pcm.samples.size());
  std::filesystem::remove(path);
}

TEST(Wav, MissingFileIsIoError) {
  EXPECT_THROW(read_wav("/nonexistent/x.wav"), IoError);
}
