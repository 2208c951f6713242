#include <algorithm>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace pi_test;

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Clamp, MagnitudesAndKnownPhases) {
  const auto sys = bench_system();
  const Observations obs = observe(sys, benchmark_signal(0), random_mask(32, 16, 0.5, 0));
  const Coefficients z = Coefficients::from_flat(32, 16, random_complex(512, 1));
  const Coefficients y = clamp(z, obs);
  for (int k = 0; k < 512; ++k) {
    EXPECT_NEAR(std::abs(y[k]), obs.magnitude(k), 1e-12 * std::max(1.0, obs.magnitude(k)));
    const double want = obs.known(k) ? std::arg(obs.measurement(k)) : std::arg(z[k]);
    if (obs.magnitude(k) > 1e-9) { EXPECT_NEAR(std::abs(std::remainder(std::arg(y[k]) - want, kTwoPi)), 0.0, 1e-12); }
  }
  EXPECT_THROW(clamp(Coefficients(32, 15), obs), DimensionError);
}

TEST(Gli, ReducesToClassicGriffinLimWithoutKnownPhases) {
  const auto sys = bench_system();
  const Observations obs = observe(sys, benchmark_signal(1), BinaryMask(32, 16, false));
  GliConfig cfg;
  cfg.n_iter = 50;
  cfg.residual_tol = 0.0;
  cfg.init_seed = 5;
  const GliResult res = gli_run(sys, obs, cfg);

  // textbook loop: project onto consistent coefficients, then impose magnitudes
  Coefficients y = gli_initial_iterate(obs, 5);
  for (int i = 0; i < 50; ++i) {
    const Coefficients z = stft(sys, istft(sys, y));
    for (Eigen::Index k = 0; k < z.size(); ++k) y[k] = std::polar(obs.magnitude(k), std::arg(z[k]));
  }
  EXPECT_EQ(res.iterations_run, 50);
  EXPECT_EQ(res.x_hat, istft(sys, y));
}

TEST(Gli, InitialIterateHonoursObservations) {
  const auto sys = bench_system();
  const Observations obs = observe(sys, benchmark_signal(2), random_mask(32, 16, 0.3, 2));
  const Coefficients y = gli_initial_iterate(obs, 1);
  for (int k = 0; k < 512; ++k) {
    EXPECT_NEAR(std::abs(y[k]), obs.magnitude(k), 1e-12 * std::max(1.0, obs.magnitude(k)));
    if (obs.known(k)) { EXPECT_NEAR(std::abs(y[k] - obs.measurement(k)), 0.0, 1e-12 * std::max(1.0, obs.magnitude(k))); }
  }
  EXPECT_EQ(gli_initial_iterate(obs, 1).matrix(), y.matrix());
  EXPECT_NE(gli_initial_iterate(obs, 2).matrix(), y.matrix());
}

TEST(Gli, AllPhasesKnownIsExactInversion) {
  const auto sys = bench_system();
  const RealVector x = benchmark_signal(3);
  const Observations obs = observe(sys, x, BinaryMask(32, 16));
  const GliResult res = gli_run(sys, obs, GliConfig{});
  EXPECT_LE(error_db(x, res.x_hat).e_db, -200.0);
  EXPECT_LT(res.iterations_run, 10);
}

TEST(Gli, ResidualTraceIsNonIncreasing) {
  const auto sys = bench_system();
  for (int i = 0; i < 8; ++i) {
    const double ratio = 0.1 * (i + 1);
    const Observations obs = observe(sys, benchmark_signal(i), random_mask(32, 16, ratio, i));
    GliConfig cfg;
    cfg.n_iter = 400;
    cfg.init_seed = i;
    const GliResult res = gli_run(sys, obs, cfg);
    ASSERT_EQ(static_cast<int>(res.residual_trace.size()), res.iterations_run);
    for (std::size_t s = 1; s < res.residual_trace.size(); ++s)
      ASSERT_LE(res.residual_trace[s], res.residual_trace[s - 1] + 1e-10) << "ratio " << ratio << " step " << s;
  }
}

TEST(Gli, LowMissingRatioReconstructs) {
  const auto sys = bench_system();
  std::vector<double> errs;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const RealVector x = benchmark_signal(s);
    GliConfig cfg;
    cfg.init_seed = s;
    errs.push_back(error_db(x, gli_run(sys, observe(sys, x, random_mask(32, 16, 0.3, s)), cfg).x_hat).e_db);
  }
  EXPECT_LE(median_of(errs), -50.0);
}

TEST(Gli, DeterministicAndValidated) {
  const auto sys = bench_system();
  const Observations obs = observe(sys, benchmark_signal(4), random_mask(32, 16, 0.6, 4));
  GliConfig cfg;
  cfg.n_iter = 100;
  cfg.init_seed = 4;
  EXPECT_EQ(gli_run(sys, obs, cfg).x_hat, gli_run(sys, obs, cfg).x_hat);
  cfg.record_trace = false;
  EXPECT_TRUE(gli_run(sys, obs, cfg).residual_trace.empty());
  cfg.n_iter = 0;
  EXPECT_THROW(gli_run(sys, obs, cfg), ConfigError);
  cfg.n_iter = 10;
  cfg.residual_tol = -1.0;
  EXPECT_THROW(gli_run(sys, obs, cfg), ConfigError);
  EXPECT_THROW(gli_run(tiny_system(), obs, GliConfig{}), DimensionError);
}
