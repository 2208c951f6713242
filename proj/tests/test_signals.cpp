#include <filesystem>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace pi_test;

TEST(Frequency, Units) {
  EXPECT_DOUBLE_EQ(cycles_per_sample(0.8, FrequencyUnit::kNyquist), 0.4);
  EXPECT_DOUBLE_EQ(cycles_per_sample(0.8, FrequencyUnit::kSamplingRate), 0.8);
}

TEST(LinearChirp, SamplesFollowQuadraticPhase) {
  const int n_len = 128;
  const RealVector x = linear_chirp(n_len, 0.1, 0.7);
  for (int n = 0; n < n_len; ++n) {
    const double phi = 0.05 * n + 0.3 * n * n / (2.0 * (n_len - 1));  // Nyquist units halved
    EXPECT_NEAR(x[n], std::cos(kTwoPi * phi), 1e-9);
  }
}

TEST(LinearChirp, PhaseIncrementSweepsLinearly) {
  const int n_len = 1024;
  const double f0 = 0.02;
  const double f1 = 0.1;
  const RealVector x = linear_chirp(n_len, f0, f1, FrequencyUnit::kSamplingRate);
  // the phase advances by half a cycle between consecutive zero crossings
  std::vector<double> crossings;
  for (int n = 0; n + 1 < n_len; ++n)
    if ((x[n] > 0) != (x[n + 1] > 0)) crossings.push_back(n + x[n] / (x[n] - x[n + 1]));
  ASSERT_GT(crossings.size(), 20u);
  for (std::size_t i = 1; i + 1 < crossings.size(); ++i) {
    const double mid = 0.5 * (crossings[i - 1] + crossings[i + 1]);
    const double local = 1.0 / (crossings[i + 1] - crossings[i - 1]);  // one full cycle
    const double expected = f0 + (f1 - f0) * mid / (n_len - 1);
    EXPECT_NEAR(local, expected, 1e-3) << "near n = " << mid;
  }
}

TEST(LinearChirp, StftRidgeTracksInstantaneousFrequency) {
  const auto sys = bench_system();
  const double f0 = 0.0;
  const double f1 = 0.8;  // of Nyquist
  const RealVector x = linear_chirp(128, f0, f1);
  const Coefficients c = stft(sys, x);
  // frames whose window does not wrap, away from DC where the mirror image of
  // the real chirp falls inside the window's main lobe
  int checked = 0;
  for (int t = 0; t + 2 <= sys.frames() - 1; ++t) {
    const double centre = t * sys.hop() + sys.window_length() / 2.0;
    const double f = 0.5 * (f0 + (f1 - f0) * centre / 127.0);
    if (f * sys.bins() < 4.0) continue;
    ++checked;
    int best = 0;
    for (int nu = 0; nu <= sys.bins() / 2; ++nu)
      if (std::abs(c(nu, t)) > std::abs(c(best, t))) best = nu;
    EXPECT_LE(std::abs(best - f * sys.bins()), 1.5) << "frame " << t;
  }
  EXPECT_GE(checked, 10);
}

TEST(LinearChirp, RejectsBadLength) { EXPECT_THROW(linear_chirp(0, 0.0, 0.5), ConfigError); }

TEST(Dirac, SingleUnitSample) {
  const RealVector d = dirac(128, 64);
  EXPECT_EQ(d.sum(), 1.0);
  EXPECT_EQ(d[64], 1.0);
  EXPECT_THROW(dirac(128, 128), IndexError);
  EXPECT_THROW(dirac(128, -1), IndexError);
}

TEST(Noise, ExactSnr) {
  const RealVector x = linear_chirp(128, 0.0, 0.8);
  for (double snr : {0.0, 10.0, 30.0}) {
    const RealVector y = add_noise_snr(x, snr, 7);
    const double measured = 20.0 * std::log10(x.norm() / (y - x).norm());
    EXPECT_NEAR(measured, snr, 1e-9);
  }
}

TEST(Noise, InfiniteSnrIsIdentityAndErrorsAreReported) {
  const RealVector x = linear_chirp(128, 0.0, 0.8);
  EXPECT_EQ(add_noise_snr(x, std::numeric_limits<double>::infinity(), 1), x);
  EXPECT_THROW(add_noise_snr(RealVector::Zero(16), 10.0, 1), ConfigError);
  EXPECT_THROW(add_noise_snr(x, std::nan(""), 1), ConfigError);
}

TEST(Noise, DeterministicPerSeed) {
  const RealVector x = linear_chirp(128, 0.0, 0.8);
  EXPECT_EQ(add_noise_snr(x, 10.0, 3), add_noise_snr(x, 10.0, 3));
  EXPECT_NE(add_noise_snr(x, 10.0, 3), add_noise_snr(x, 10.0, 4));
}

TEST(BenchmarkSignal, CompositionAndSnr) {
  SignalSpec clean;
  clean.snr_db = std::numeric_limits<double>::infinity();
  const RealVector s = make_signal(clean);
  const RealVector expected = linear_chirp(128, 0.0, 0.8) + linear_chirp(128, 0.8, 0.6) + dirac(128, 64);
  EXPECT_LE((s - expected).norm(), 1e-14);
  const RealVector x = benchmark_signal(11);
  ASSERT_EQ(x.size(), 128);
  EXPECT_NEAR(20.0 * std::log10(s.norm() / (x - s).norm()), 10.0, 1e-9);
  EXPECT_EQ(benchmark_signal(11), x);
}

TEST(SignalCsv, RoundTripIsExact) {
  const auto path = std::filesystem::temp_directory_path() / "pi_signal_roundtrip.csv";
  const RealVector x = benchmark_signal(2);
  write_signal_csv(path.string(), x);
  EXPECT_EQ(read_signal_csv(path.string()), x);
  std::filesystem::remove(path);
}
