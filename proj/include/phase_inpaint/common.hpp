#pragma once

#include <complex>
#include <cstdint>
#include <charconv>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace phase_inpaint {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Invalid combination of construction parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Array or vector shapes that do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Index outside the valid range of a signal or time-frequency grid.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A numerical routine produced a solution it cannot interpret
/// (e.g. a lifted matrix without a positive eigenvalue).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeds a generator from a user seed plus a stream tag, so the signal noise,
/// the mask and the solver initialization of one trial are independent.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace stream {
inline constexpr std::uint64_t kNoise = 0x6e6f697365ULL;
inline constexpr std::uint64_t kMask = 0x6d61736bULL;
inline constexpr std::uint64_t kPhaseInit = 0x70686930ULL;
inline constexpr std::uint64_t kRandomFill = 0x72706966ULL;
}  // namespace stream

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

/// Unit-modulus factor of z; the argument of 0 is taken as 0.
inline Complex unit_phase(Complex z) { return std::polar(1.0, std::arg(z)); }

}  // namespace phase_inpaint
