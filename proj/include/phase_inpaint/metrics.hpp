#pragma once

#include <cmath>
#include <limits>

#include "phase_inpaint/common.hpp"

namespace phase_inpaint {

inline constexpr double kErrorFloorDb = -300.0;

struct ErrorReport {
  double e_db = 0.0;
  double theta_star = 0.0;  ///< in [0, 2 pi)
  double raw_ratio = 0.0;   ///< |x - e^{i theta*} x_hat| / |x|
};

inline double ratio_to_db(double ratio) {
  return ratio > 1e-15 ? 20.0 * std::log10(ratio) : kErrorFloorDb;
}

/// Relative error in dB minimized over a global phase. The minimizer is the
/// argument of x_hat^H x.
inline ErrorReport error_db(const ComplexVector& x, const ComplexVector& x_hat) {
  if (x.size() != x_hat.size()) throw DimensionError("error_db: length mismatch");
  const double ref = x.norm();
  if (ref == 0.0) throw ConfigError("error_db: reference signal is zero");
  ErrorReport rep;
  double theta = std::arg(x_hat.dot(x));  // Eigen's dot conjugates the first argument
  if (theta < 0.0) theta += kTwoPi;
  if (theta >= kTwoPi) theta = 0.0;
  rep.theta_star = theta;
  rep.raw_ratio = (x - std::polar(1.0, theta) * x_hat).norm() / ref;
  rep.e_db = ratio_to_db(rep.raw_ratio);
  return rep;
}

inline ErrorReport error_db(const RealVector& x, const ComplexVector& x_hat) {
  return error_db(ComplexVector(x.cast<Complex>()), x_hat);
}

/// Brute-force minimum over a uniform grid of global phases.
inline double error_db_grid_oracle(const ComplexVector& x, const ComplexVector& x_hat, int grid_points) {
  if (x.size() != x_hat.size()) throw DimensionError("error_db_grid_oracle: length mismatch");
  const double ref = x.norm();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double theta = kTwoPi * i / grid_points;
    best = std::min(best, (x - std::polar(1.0, theta) * x_hat).norm() / ref);
  }
  return ratio_to_db(best);
}

}  // namespace phase_inpaint
