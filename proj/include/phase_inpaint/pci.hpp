#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "phase_inpaint/gabor.hpp"
#include "phase_inpaint/observe.hpp"

namespace phase_inpaint {

/// FT x FT cost Diag(c) (I - M M^+) Diag(c) with c = |b| flattened.
struct GammaMatrix {
  ComplexMatrix values;
  [[nodiscard]] Eigen::Index dim() const { return values.rows(); }
};

inline GammaMatrix build_gamma(const GaborSystem& sys, const Observations& obs) {
  if (obs.bins() != sys.bins() || obs.frames() != sys.frames())
    throw DimensionError("build_gamma: observations do not match the Gabor system");
  const Eigen::Index ft = sys.coefficient_count();
  const ComplexMatrix m = atom_matrix(sys);
  ComplexMatrix proj = -(m * synthesis_matrix(sys));
  proj.diagonal().array() += 1.0;
  const RealVector c = Eigen::Map<const RealVector>(obs.magnitudes().data(), ft);
  ComplexMatrix g = c.asDiagonal() * proj * c.asDiagonal();
  return {0.5 * (g + g.adjoint())};
}

/// Condenses the known-phase cells into one coordinate. Coordinate 0 (when
/// has_anchor) multiplies the fixed unit vector b/|b| on the known cells;
/// the remaining coordinates are the free cells in ascending order.
struct KnownBlockReduction {
  std::vector<int> known;
  std::vector<int> free;
  ComplexVector anchor_phases;  ///< b[k]/|b[k]| for k in known
  RealVector magnitudes;        ///< c, length FT
  bool has_anchor = false;

  [[nodiscard]] Eigen::Index full_dim() const { return magnitudes.size(); }
  [[nodiscard]] Eigen::Index dim() const {
    return static_cast<Eigen::Index>(free.size()) + (has_anchor ? 1 : 0);
  }
  [[nodiscard]] Eigen::Index free_offset() const { return has_anchor ? 1 : 0; }

  /// The FT x dim aggregation matrix B.
  [[nodiscard]] ComplexMatrix aggregation() const {
    ComplexMatrix b = ComplexMatrix::Zero(full_dim(), dim());
    for (std::size_t i = 0; i < known.size(); ++i) b(known[i], 0) = anchor_phases[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < free.size(); ++j) b(free[j], free_offset() + static_cast<Eigen::Index>(j)) = 1.0;
    return b;
  }

  /// B^H G B without forming B.
  [[nodiscard]] ComplexMatrix reduce(const ComplexMatrix& g) const {
    const Eigen::Index d = dim();
    const Eigen::Index off = free_offset();
    ComplexMatrix out(d, d);
    for (std::size_t j = 0; j < free.size(); ++j)
      for (std::size_t i = 0; i < free.size(); ++i)
        out(off + static_cast<Eigen::Index>(i), off + static_cast<Eigen::Index>(j)) = g(free[i], free[j]);
    if (has_anchor) {
      Complex corner{0.0, 0.0};
      for (std::size_t p = 0; p < known.size(); ++p)
        for (std::size_t q = 0; q < known.size(); ++q)
          corner += std::conj(anchor_phases[static_cast<Eigen::Index>(p)]) * g(known[p], known[q]) *
                    anchor_phases[static_cast<Eigen::Index>(q)];
      out(0, 0) = corner;
      for (std::size_t j = 0; j < free.size(); ++j) {
        Complex acc{0.0, 0.0};
        for (std::size_t p = 0; p < known.size(); ++p)
          acc += std::conj(anchor_phases[static_cast<Eigen::Index>(p)]) * g(known[p], free[j]);
        out(0, off + static_cast<Eigen::Index>(j)) = acc;
        out(off + static_cast<Eigen::Index>(j), 0) = std::conj(acc);
      }
    }
    return 0.5 * (out + out.adjoint());
  }

  /// B v.
  [[nodiscard]] ComplexVector expand(const ComplexVector& v) const {
    ComplexVector u = ComplexVector::Zero(full_dim());
    for (std::size_t i = 0; i < known.size(); ++i) u[known[i]] = anchor_phases[static_cast<Eigen::Index>(i)] * v[0];
    for (std::size_t j = 0; j < free.size(); ++j) u[free[j]] = v[free_offset() + static_cast<Eigen::Index>(j)];
    return u;
  }
};

/// Known cells whose magnitude is below zero_mag_eps * max(c) join the free
/// set: their phase is undefined and their rows of Gamma vanish.
inline KnownBlockReduction reduce_known_block(const Observations& obs, double zero_mag_eps = 1e-12) {
  KnownBlockReduction red;
  const Eigen::Index ft = obs.size();
  red.magnitudes = Eigen::Map<const RealVector>(obs.magnitudes().data(), ft);
  const double cmax = ft ? red.magnitudes.maxCoeff() : 0.0;
  std::vector<Complex> phases;
  for (Eigen::Index k = 0; k < ft; ++k) {
    const double ck = red.magnitudes[k];
    if (obs.known(k) && ck > 0.0 && ck >= zero_mag_eps * cmax) {
      red.known.push_back(static_cast<int>(k));
      const Complex b = obs.measurement(k);
      phases.push_back(b / std::abs(b));
    } else {
      red.free.push_back(static_cast<int>(k));
    }
  }
  red.has_anchor = !red.known.empty();
  red.anchor_phases = Eigen::Map<ComplexVector>(phases.data(), static_cast<Eigen::Index>(phases.size()));
  return red;
}

/// Phase Gram matrix, stored in reduced coordinates.
struct PhaseMatrix {
  ComplexMatrix values;
  KnownBlockReduction reduction;

  /// B U B^H; its known block equals the fixed outer product of known phases.
  [[nodiscard]] ComplexMatrix full() const {
    const ComplexMatrix b = reduction.aggregation();
    return b * values * b.adjoint();
  }
};

struct PciConfig {
  int max_sweeps = 500;
  /// Stop when a sweep lowers the objective by less than this fraction.
  double obj_tol = 1e-9;
  /// Strict-feasibility margin of the column update, in (0, 1).
  double nu = 1e-6;
  double zero_mag_eps = 1e-12;
  /// Compute the smallest eigenvalue of U after every sweep (costly).
  bool track_min_eig = false;
};

struct PciSweepLog {
  int sweep = 0;
  double objective = 0.0;
  double min_eig_estimate = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct PciResult {
  PhaseMatrix phases;
  bool converged = false;
  int sweeps = 0;
  double initial_objective = 0.0;
  double objective = 0.0;
  std::vector<PciSweepLog> log;
};

namespace detail {

inline void check_pci_config(const PciConfig& cfg) {
  if (!(cfg.nu > 0.0 && cfg.nu < 1.0)) throw ConfigError("pci: nu must lie in (0, 1)");
  if (cfg.max_sweeps < 1) throw ConfigError("pci: max_sweeps must be >= 1");
  if (!(cfg.obj_tol >= 0.0)) throw ConfigError("pci: obj_tol must be >= 0");
}

inline double trace_product(const ComplexMatrix& u, const ComplexMatrix& g) {
  return u.cwiseProduct(g.transpose()).sum().real();
}

/// One closed-form row/column update of min Tr(U G) s.t. diag(U) = 1, U >= 0:
/// with x = U_{-i,-i} g and gamma = g^H x, U_{-i,i} = -sqrt((1 - nu) / gamma) x.
inline void bcd_update(ComplexMatrix& u, const ComplexMatrix& g, Eigen::Index i, double nu) {
  ComplexVector col = g.col(i);
  col[i] = 0.0;
  if (col.squaredNorm() == 0.0) return;
  ComplexVector x = u * col;
  x[i] = 0.0;
  const double gamma = col.dot(x).real();
  if (!(gamma > 0.0)) return;
  x *= -std::sqrt((1.0 - nu) / gamma);
  u.col(i) = x;
  u(i, i) = 1.0;
  u.row(i) = x.adjoint();
  u(i, i) = 1.0;
}

inline double min_eigenvalue(const ComplexMatrix& u) {
  return Eigen::SelfAdjointEigenSolver<ComplexMatrix>(u, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

}  // namespace detail

/// Block coordinate descent on the reduced problem: cyclic sweeps in
/// ascending coordinate order starting from the all-ones matrix.
inline PciResult pci_solve(const GammaMatrix& gamma, const Observations& obs, const PciConfig& cfg) {
  detail::check_pci_config(cfg);
  if (gamma.dim() != obs.size()) throw DimensionError("pci_solve: Gamma does not match the observations");
  PciResult res;
  res.phases.reduction = reduce_known_block(obs, cfg.zero_mag_eps);
  const ComplexMatrix g = res.phases.reduction.reduce(gamma.values);
  const Eigen::Index n = g.rows();
  ComplexMatrix u = ComplexMatrix::Ones(n, n);

  double prev = detail::trace_product(u, g);
  res.initial_objective = prev;
  res.objective = prev;
  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 1; s <= cfg.max_sweeps; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) detail::bcd_update(u, g, i, cfg.nu);
    const double obj = detail::trace_product(u, g);
    PciSweepLog entry;
    entry.sweep = s;
    entry.objective = obj;
    if (cfg.track_min_eig) entry.min_eig_estimate = detail::min_eigenvalue(u);
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(entry);
    res.sweeps = s;
    res.objective = obj;
    const double scale = std::max(std::abs(prev), std::numeric_limits<double>::min());
    const bool done = (prev - obj) <= cfg.obj_tol * scale;
    prev = obj;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.phases.values = std::move(u);
  return res;
}

struct FixedEntryResult {
  ComplexMatrix values;  ///< FT x FT
  double objective = 0.0;
  int sweeps = 0;
};

/// Reference solver on the unreduced FT x FT problem: the known-known block
/// is pinned to the outer product of known phases and only the columns of
/// free cells are updated. Used to cross-check the reduction.
inline FixedEntryResult pci_solve_fixed_entries(const GammaMatrix& gamma, const Observations& obs,
                                                const PciConfig& cfg) {
  detail::check_pci_config(cfg);
  const KnownBlockReduction red = reduce_known_block(obs, cfg.zero_mag_eps);
  ComplexVector v = ComplexVector::Ones(gamma.dim());
  for (std::size_t i = 0; i < red.known.size(); ++i) v[red.known[i]] = red.anchor_phases[static_cast<Eigen::Index>(i)];
  FixedEntryResult res;
  ComplexMatrix u = v * v.adjoint();
  double prev = detail::trace_product(u, gamma.values);
  for (int s = 1; s <= cfg.max_sweeps; ++s) {
    for (int k : red.free) detail::bcd_update(u, gamma.values, k, cfg.nu);
    const double obj = detail::trace_product(u, gamma.values);
    res.sweeps = s;
    const double scale = std::max(std::abs(prev), std::numeric_limits<double>::min());
    const bool done = (prev - obj) <= cfg.obj_tol * scale;
    prev = obj;
    if (done) break;
  }
  res.objective = prev;
  res.values = std::move(u);
  return res;
}

/// Leading eigenvector mapped to full coordinates, normalized entrywise, then
/// rotated onto the known phases and re-pinned there. Without known phases
/// the largest-magnitude cell gets phase 0.
inline ComplexVector extract_phases(const PhaseMatrix& pm) {
  const auto& red = pm.reduction;
  const ComplexMatrix h = 0.5 * (pm.values + pm.values.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  ComplexVector u = red.expand(es.eigenvectors().col(h.rows() - 1));
  for (auto& z : u) z = std::abs(z) < 1e-12 ? Complex(1.0, 0.0) : z / std::abs(z);

  if (red.has_anchor) {
    Complex align{0.0, 0.0};
    for (std::size_t i = 0; i < red.known.size(); ++i)
      align += std::conj(u[red.known[i]]) * red.anchor_phases[static_cast<Eigen::Index>(i)];
    if (std::abs(align) > 0.0) u *= align / std::abs(align);
    for (std::size_t i = 0; i < red.known.size(); ++i) u[red.known[i]] = red.anchor_phases[static_cast<Eigen::Index>(i)];
  } else if (u.size() > 0) {
    Eigen::Index top = 0;
    red.magnitudes.maxCoeff(&top);
    u *= std::conj(u[top]);
    u[top] = 1.0;
  }
  return u;
}

/// Least-squares signal M^+ (c o u).
inline ComplexVector pci_signal(const GaborSystem& sys, const Observations& obs, const ComplexVector& u) {
  if (u.size() != obs.size()) throw DimensionError("pci_signal: phase vector length mismatch");
  Coefficients y(obs.bins(), obs.frames());
  for (Eigen::Index k = 0; k < y.size(); ++k) y[k] = obs.magnitude(k) * u[k];
  return istft(sys, y);
}

}  // namespace phase_inpaint
