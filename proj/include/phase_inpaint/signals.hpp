#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "phase_inpaint/common.hpp"

namespace phase_inpaint {

/// How chirp frequencies are normalized.
enum class FrequencyUnit {
  kNyquist,      ///< 1.0 is the Nyquist frequency (0.5 cycles/sample)
  kSamplingRate  ///< 1.0 is the sampling rate (1 cycle/sample)
};

inline double cycles_per_sample(double f, FrequencyUnit unit) {
  return unit == FrequencyUnit::kNyquist ? 0.5 * f : f;
}

struct ChirpSpec {
  double f_start = 0.0;
  double f_end = 0.0;
};

struct SignalSpec {
  int length = 128;
  std::vector<ChirpSpec> chirps{{0.0, 0.8}, {0.8, 0.6}};
  std::vector<int> dirac_positions{64};
  /// +infinity disables the noise.
  double snr_db = 10.0;
  std::uint64_t seed = 0;
  FrequencyUnit unit = FrequencyUnit::kNyquist;
};

/// cos(2 pi phi(n)) with instantaneous frequency sweeping linearly from f_start
/// (n = 0) to f_end (n = N - 1).
inline RealVector linear_chirp(int n_len, double f_start, double f_end,
                               FrequencyUnit unit = FrequencyUnit::kNyquist) {
  if (n_len <= 0) throw ConfigError("linear_chirp: length must be positive");
  const double f0 = cycles_per_sample(f_start, unit);
  const double f1 = cycles_per_sample(f_end, unit);
  const double span = n_len > 1 ? static_cast<double>(n_len - 1) : 1.0;
  RealVector x(n_len);
  for (int n = 0; n < n_len; ++n) {
    const double dn = n;
    const double phi = f0 * dn + (f1 - f0) * dn * dn / (2.0 * span);
    // reduce before scaling so long chirps keep full phase precision
    x[n] = std::cos(kTwoPi * (phi - std::floor(phi)));
  }
  return x;
}

inline RealVector dirac(int n_len, int pos) {
  if (pos < 0 || pos >= n_len)
    throw IndexError("dirac: position " + std::to_string(pos) + " outside [0, " +
                     std::to_string(n_len) + ")");
  RealVector x = RealVector::Zero(n_len);
  x[pos] = 1.0;
  return x;
}

/// x + n with white Gaussian n rescaled so that 10 log10(|x|^2 / |n|^2) = snr_db.
inline RealVector add_noise_snr(const RealVector& x, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return x;
  if (!std::isfinite(snr_db)) throw ConfigError("add_noise_snr: SNR must be finite or +inf");
  const double signal_norm = x.norm();
  if (signal_norm == 0.0) throw ConfigError("add_noise_snr: SNR undefined for a zero signal");
  auto rng = make_rng(seed, stream::kNoise);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RealVector noise(x.size());
  for (auto& v : noise) v = gauss(rng);
  const double target = signal_norm / std::pow(10.0, snr_db / 20.0);
  return x + noise * (target / noise.norm());
}

inline RealVector make_signal(const SignalSpec& spec) {
  if (spec.length <= 0) throw ConfigError("signal: length must be positive");
  RealVector x = RealVector::Zero(spec.length);
  for (const auto& c : spec.chirps) x += linear_chirp(spec.length, c.f_start, c.f_end, spec.unit);
  for (int p : spec.dirac_positions) x += dirac(spec.length, p);
  return add_noise_snr(x, spec.snr_db, spec.seed);
}

/// Benchmark test signal: two chirps (0 -> 0.8 and 0.8 -> 0.6 of Nyquist), a
/// dirac at 64 and white noise at 10 dB SNR, N = 128.
inline RealVector benchmark_signal(std::uint64_t seed) {
  SignalSpec spec;
  spec.seed = seed;
  return make_signal(spec);
}

/// Single-column CSV, one sample per line.
inline void write_signal_csv(const std::string& path, const RealVector& x) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (double v : x) out << format_double(v) << '\n';
}

inline RealVector read_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) vals.push_back(std::stod(line));
  return Eigen::Map<RealVector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace phase_inpaint
