#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "phase_inpaint/gabor.hpp"
#include "phase_inpaint/observe.hpp"

namespace phase_inpaint {

struct GliConfig {
  int n_iter = 2000;
  std::uint64_t init_seed = 0;
  /// Stop once |res(i) - res(i-1)| drops below this.
  double residual_tol = 1e-12;
  bool record_trace = true;
};

struct GliResult {
  ComplexVector x_hat;
  int iterations_run = 0;
  /// |y(i) - z(i)| for i = 1..iterations_run.
  std::vector<double> residual_trace;
};

/// Nearest point to z with magnitude r, phase arg b on the known cells and
/// arg z elsewhere.
inline Coefficients clamp(const Coefficients& z, const Observations& obs) {
  if (z.bins() != obs.bins() || z.frames() != obs.frames())
    throw DimensionError("clamp: shape mismatch");
  Coefficients y(obs.bins(), obs.frames());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double phi = obs.known(k) ? std::arg(obs.measurement(k)) : std::arg(z[k]);
    y[k] = std::polar(obs.magnitude(k), phi);
  }
  return y;
}

/// Random initial phase on missing cells, then clamp.
inline Coefficients gli_initial_iterate(const Observations& obs, std::uint64_t seed) {
  auto rng = make_rng(seed, stream::kPhaseInit);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  Coefficients y(obs.bins(), obs.frames());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double phi = obs.known(k) ? std::arg(obs.measurement(k)) : angle(rng);
    y[k] = std::polar(obs.magnitude(k), phi);
  }
  return y;
}

/// Griffin-Lim with known phases held fixed: alternate the consistency
/// projection and the magnitude / known-phase clamp.
inline GliResult gli_run(const GaborSystem& sys, const Observations& obs, const GliConfig& cfg) {
  if (cfg.n_iter < 1) throw ConfigError("gli: n_iter must be >= 1");
  if (!(cfg.residual_tol >= 0.0)) throw ConfigError("gli: residual_tol must be >= 0");
  if (obs.bins() != sys.bins() || obs.frames() != sys.frames())
    throw DimensionError("gli: observations do not match the Gabor system");

  GliResult res;
  Coefficients y = gli_initial_iterate(obs, cfg.init_seed);
  double previous = -1.0;
  for (int i = 1; i <= cfg.n_iter; ++i) {
    const Coefficients z = consistency_projection(sys, y);
    y = clamp(z, obs);
    const double residual = (y.matrix() - z.matrix()).norm();
    if (cfg.record_trace) res.residual_trace.push_back(residual);
    res.iterations_run = i;
    if (previous >= 0.0 && std::abs(previous - residual) < cfg.residual_tol) break;
    previous = residual;
  }
  res.x_hat = istft(sys, y);
  return res;
}

}  // namespace phase_inpaint
