#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "phase_inpaint/gabor.hpp"
#include "phase_inpaint/observe.hpp"

namespace phase_inpaint {

/// N x N Hermitian candidate for the lifted signal x x^H.
struct LiftedMatrix {
  ComplexMatrix values;

  [[nodiscard]] Eigen::Index dim() const { return values.rows(); }
  [[nodiscard]] double trace() const { return values.trace().real(); }
  [[nodiscard]] double hermitian_error() const { return (values - values.adjoint()).norm(); }
  /// Eigenvalues in ascending order.
  [[nodiscard]] RealVector eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<ComplexMatrix>(values, Eigen::EigenvaluesOnly).eigenvalues();
  }
  /// Number of eigenvalues above rel_tol times the largest one.
  [[nodiscard]] int rank_estimate(double rel_tol = 1e-6) const {
    const RealVector ev = eigenvalues();
    const double top = ev[ev.size() - 1];
    if (top <= 0.0) return 0;
    return static_cast<int>((ev.array() > rel_tol * top).count());
  }
  /// lambda_2 / lambda_1.
  [[nodiscard]] double rank_gap() const {
    const RealVector ev = eigenvalues();
    if (ev.size() < 2 || ev[ev.size() - 1] <= 0.0) return 0.0;
    return ev[ev.size() - 2] / ev[ev.size() - 1];
  }
};

enum class ConstraintMode { kFull, kAnchored };

inline std::string to_string(ConstraintMode m) { return m == ConstraintMode::kFull ? "full" : "anchored"; }
inline ConstraintMode constraint_mode_from_string(const std::string& s) {
  if (s == "full") return ConstraintMode::kFull;
  if (s == "anchored") return ConstraintMode::kAnchored;
  throw ConfigError("pli: unknown constraint mode '" + s + "'");
}

/// Linear constraints on L. A pair (k, k', target) reads
///   Tr(a_k a_{k'}^H L) = a_{k'}^H L a_k = target,
/// which for L = x x^H equals b[k'] conj(b[k]). A diagonal entry (k, target)
/// reads a_k^H L a_k = r[k]^2.
struct PliConstraints {
  struct Pair {
    int k = 0;
    int k_prime = 0;
    Complex target;
  };
  struct Diagonal {
    int k = 0;
    double target = 0.0;
  };
  std::vector<Pair> pairs;
  std::vector<Diagonal> diagonals;

  [[nodiscard]] std::size_t rows() const { return pairs.size() + diagonals.size(); }
};

/// Magnitude rows for every missing-phase cell plus phase rows over the known
/// cells: all ordered pairs (full) or the diagonal pairs plus pairs against the
/// largest-magnitude known cell (anchored). With no known cell both modes
/// reduce to the magnitude rows only.
inline PliConstraints build_constraints(const Observations& obs, const GaborSystem& sys, ConstraintMode mode) {
  if (obs.bins() != sys.bins() || obs.frames() != sys.frames())
    throw DimensionError("build_constraints: observations do not match the Gabor system");
  PliConstraints c;
  const auto known = obs.mask().support(true);
  for (int k : obs.mask().support(false)) c.diagonals.push_back({k, obs.magnitude(k) * obs.magnitude(k)});
  if (known.empty()) return c;

  if (mode == ConstraintMode::kFull) {
    c.pairs.reserve(known.size() * known.size());
    for (int k : known)
      for (int kp : known) c.pairs.push_back({k, kp, obs.measurement(kp) * std::conj(obs.measurement(k))});
    return c;
  }
  int anchor = known.front();
  for (int k : known)
    if (obs.magnitude(k) > obs.magnitude(anchor)) anchor = k;
  for (int k : known) c.pairs.push_back({k, k, Complex(obs.magnitude(k) * obs.magnitude(k), 0.0)});
  const Complex b0 = obs.measurement(anchor);
  for (int k : known)
    if (k != anchor) c.pairs.push_back({k, anchor, b0 * std::conj(obs.measurement(k))});
  return c;
}

/// Values of every constraint row at L, pairs first then diagonals.
inline ComplexVector evaluate_constraints(const GaborSystem& sys, const PliConstraints& c, const ComplexMatrix& l) {
  ComplexVector out(static_cast<Eigen::Index>(c.rows()));
  Eigen::Index i = 0;
  for (const auto& p : c.pairs) {
    const ComplexVector ak = atom(sys, p.k / sys.bins(), p.k % sys.bins());
    const ComplexVector akp = atom(sys, p.k_prime / sys.bins(), p.k_prime % sys.bins());
    out[i++] = akp.dot(l * ak);
  }
  for (const auto& d : c.diagonals) {
    const ComplexVector ak = atom(sys, d.k / sys.bins(), d.k % sys.bins());
    out[i++] = ak.dot(l * ak);
  }
  return out;
}

inline ComplexVector constraint_targets(const PliConstraints& c) {
  ComplexVector t(static_cast<Eigen::Index>(c.rows()));
  Eigen::Index i = 0;
  for (const auto& p : c.pairs) t[i++] = p.target;
  for (const auto& d : c.diagonals) t[i++] = Complex(d.target, 0.0);
  return t;
}

struct PliConfig {
  ConstraintMode constraint_mode = ConstraintMode::kFull;
  /// Cap on the number of continuation stages taken from penalty_schedule.
  int max_outer = 8;
  int max_inner = 3000;
  /// Trace penalties relative to |A^*(targets)|_2; the last stage is usually 0.
  std::vector<double> penalty_schedule{1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0};
  double feas_tol = 1e-6;
  double obj_tol = 1e-8;
  /// Relative iterate change that ends a penalized stage.
  double stage_tol = 1e-6;
  /// Relative iterate change that ends the final stage.
  double final_tol = 1e-15;
};

struct PliStageLog {
  int stage = 0;
  double lambda = 0.0;
  double feas_residual = 0.0;
  double trace = 0.0;
  int rank_estimate = 0;
  int iterations = 0;
  double seconds = 0.0;
};

inline nlohmann::json to_json(const PliStageLog& s) {
  return {{"stage", s.stage},         {"lambda", s.lambda}, {"feas_residual", s.feas_residual},
          {"trace", s.trace},         {"rank_estimate", s.rank_estimate},
          {"iterations", s.iterations}, {"seconds", s.seconds}};
}

struct PliResult {
  LiftedMatrix lifted;
  bool converged = false;
  double feas_residual = 0.0;
  int iterations = 0;
  std::vector<PliStageLog> stages;
};

namespace detail {

/// Pair rows L -> a_{k'}^H L a_k over the atoms they touch. Dense pair sets
/// (e.g. all ordered pairs of known cells) go through one Gram product.
class PairBlock {
 public:
  PairBlock(const GaborSystem& sys, const std::vector<PliConstraints::Pair>& pairs) {
    std::unordered_map<int, int> local;
    const auto slot = [&](int k) {
      auto [it, inserted] = local.try_emplace(k, static_cast<int>(cells_.size()));
      if (inserted) cells_.push_back(k);
      return it->second;
    };
    for (const auto& p : pairs) {
      const int i = slot(p.k);
      const int j = slot(p.k_prime);
      rows_.push_back({i, j});
    }
    atoms_h_ = atom_rows(sys, cells_);
    const auto n_cells = static_cast<double>(cells_.size());
    dense_ = !cells_.empty() && static_cast<double>(rows_.size()) > 0.25 * n_cells * n_cells;
  }

  [[nodiscard]] Eigen::Index rows() const { return static_cast<Eigen::Index>(rows_.size()); }

  void apply(const ComplexMatrix& l, Eigen::Ref<ComplexVector> out) const {
    if (rows() == 0) return;
    if (dense_) {
      const ComplexMatrix gram = atoms_h_ * l * atoms_h_.adjoint();
      for (Eigen::Index r = 0; r < rows(); ++r) out[r] = gram(rows_[r].j, rows_[r].i);
    } else {
      const ComplexMatrix la = l * atoms_h_.adjoint();  // column i = L a_i
      for (Eigen::Index r = 0; r < rows(); ++r) out[r] = (atoms_h_.row(rows_[r].j) * la.col(rows_[r].i)).value();
    }
  }

  /// Accumulates sum_r e_r a_{k'} a_k^H into g.
  void adjoint(const Eigen::Ref<const ComplexVector>& e, ComplexMatrix& g) const {
    if (rows() == 0) return;
    if (dense_) {
      ComplexMatrix weights = ComplexMatrix::Zero(atoms_h_.rows(), atoms_h_.rows());
      for (Eigen::Index r = 0; r < rows(); ++r) weights(rows_[r].j, rows_[r].i) += e[r];
      g.noalias() += atoms_h_.adjoint() * (weights * atoms_h_);
    } else {
      ComplexMatrix w = ComplexMatrix::Zero(atoms_h_.rows(), atoms_h_.cols());
      for (Eigen::Index r = 0; r < rows(); ++r) w.row(rows_[r].j) += e[r] * atoms_h_.row(rows_[r].i);
      g.noalias() += atoms_h_.adjoint() * w;
    }
  }

  static ComplexMatrix atom_rows(const GaborSystem& sys, const std::vector<int>& cells) {
    ComplexMatrix a(static_cast<Eigen::Index>(cells.size()), sys.signal_length());
    for (std::size_t i = 0; i < cells.size(); ++i)
      a.row(static_cast<Eigen::Index>(i)) = atom(sys, cells[i] / sys.bins(), cells[i] % sys.bins()).adjoint();
    return a;
  }

 private:
  struct Row {
    int i;  // local index of k
    int j;  // local index of k'
  };
  std::vector<int> cells_;
  std::vector<Row> rows_;
  ComplexMatrix atoms_h_;
  bool dense_ = false;
};

/// Magnitude rows L -> a_k^H L a_k.
class DiagonalBlock {
 public:
  DiagonalBlock(const GaborSystem& sys, const std::vector<PliConstraints::Diagonal>& diags) {
    std::vector<int> cells;
    for (const auto& d : diags) cells.push_back(d.k);
    atoms_h_ = PairBlock::atom_rows(sys, cells);
  }

  [[nodiscard]] Eigen::Index rows() const { return atoms_h_.rows(); }

  void apply(const ComplexMatrix& l, Eigen::Ref<ComplexVector> out) const {
    if (rows() == 0) return;
    const ComplexMatrix q = atoms_h_ * l;
    out = q.cwiseProduct(atoms_h_.conjugate()).rowwise().sum();
  }

  void adjoint(const Eigen::Ref<const ComplexVector>& e, ComplexMatrix& g) const {
    if (rows() == 0) return;
    g.noalias() += atoms_h_.adjoint() * (e.asDiagonal() * atoms_h_);
  }

 private:
  ComplexMatrix atoms_h_;
};

/// The full constraint map, rows ordered as in constraint_targets().
class LiftedOperator {
 public:
  LiftedOperator(const GaborSystem& sys, const PliConstraints& c)
      : n_(sys.signal_length()), pairs_(sys, c.pairs), diagonals_(sys, c.diagonals) {}

  [[nodiscard]] Eigen::Index rows() const { return pairs_.rows() + diagonals_.rows(); }

  [[nodiscard]] ComplexVector apply(const ComplexMatrix& l) const {
    ComplexVector out(rows());
    pairs_.apply(l, out.head(pairs_.rows()));
    diagonals_.apply(l, out.tail(diagonals_.rows()));
    return out;
  }

  /// Hermitian part of the adjoint applied to e.
  [[nodiscard]] ComplexMatrix adjoint(const ComplexVector& e) const {
    ComplexMatrix g = ComplexMatrix::Zero(n_, n_);
    pairs_.adjoint(e.head(pairs_.rows()), g);
    diagonals_.adjoint(e.tail(diagonals_.rows()), g);
    return 0.5 * (g + g.adjoint());
  }

 private:
  Eigen::Index n_;
  PairBlock pairs_;
  DiagonalBlock diagonals_;
};

/// Euclidean projection onto the PSD cone (negative eigenvalues clipped).
inline ComplexMatrix project_psd(const ComplexMatrix& a) {
  const ComplexMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const RealVector& ev = es.eigenvalues();
  Eigen::Index first = 0;
  while (first < ev.size() && ev[first] <= 0.0) ++first;
  const Eigen::Index keep = ev.size() - first;
  if (keep == 0) return ComplexMatrix::Zero(a.rows(), a.cols());
  const ComplexMatrix v = es.eigenvectors().rightCols(keep);
  const ComplexMatrix out = v * ev.tail(keep).cast<Complex>().asDiagonal() * v.adjoint();
  return 0.5 * (out + out.adjoint());
}

inline double largest_abs_eigenvalue(const ComplexMatrix& h) {
  const RealVector ev = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(h, Eigen::EigenvaluesOnly).eigenvalues();
  return ev.cwiseAbs().maxCoeff();
}

/// Power iteration for |A^* A|.
inline double lipschitz_estimate(const LiftedOperator& op, Eigen::Index n) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> g;
  ComplexMatrix v(n, n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = Complex(g(rng), g(rng));
  v = 0.5 * (v + v.adjoint());
  double est = 0.0;
  for (int it = 0; it < 30; ++it) {
    const double nv = v.norm();
    if (nv == 0.0) return 1.0;
    v /= nv;
    v = op.adjoint(op.apply(v));
    est = v.norm();
  }
  return est > 0.0 ? est : 1.0;
}

}  // namespace detail

/// Trace minimization over the PSD cone subject to the lifted constraints,
/// solved as min 0.5 |A(L) - t|^2 + lambda tau Tr(L) over L >= 0 with an
/// accelerated projected gradient method, backtracking on the step, and lambda
/// decreased along penalty_schedule.
inline PliResult pli_solve(const GaborSystem& sys, const Observations& obs, const PliConfig& cfg) {
  if (cfg.max_outer < 1 || cfg.max_inner < 1) throw ConfigError("pli: iteration limits must be >= 1");
  if (!(cfg.feas_tol > 0.0) || !(cfg.obj_tol > 0.0)) throw ConfigError("pli: tolerances must be > 0");
  if (cfg.penalty_schedule.empty()) throw ConfigError("pli: empty penalty schedule");

  const PliConstraints cons = build_constraints(obs, sys, cfg.constraint_mode);
  const detail::LiftedOperator op(sys, cons);
  const ComplexVector targets = constraint_targets(cons);
  const Eigen::Index n = sys.signal_length();
  const double target_norm = targets.norm();

  PliResult res;
  res.lifted.values = ComplexMatrix::Zero(n, n);
  if (target_norm == 0.0) {
    res.converged = true;
    return res;
  }

  const double tau = detail::largest_abs_eigenvalue(op.adjoint(targets));
  // Tr(x x^H) estimate from the magnitudes; floors the relative-change test
  // while iterates are still near zero.
  const double scale_floor = 1e-10 * obs.magnitudes().squaredNorm() / sys.frame_diagonal().maxCoeff();
  double step = 1.0 / detail::lipschitz_estimate(op, n);
  const ComplexMatrix identity = ComplexMatrix::Identity(n, n);

  ComplexMatrix l = ComplexMatrix::Zero(n, n);
  ComplexVector al = ComplexVector::Zero(op.rows());

  const auto stages = std::min<std::size_t>(cfg.penalty_schedule.size(), static_cast<std::size_t>(cfg.max_outer));
  for (std::size_t s = 0; s < stages; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lambda = cfg.penalty_schedule[s] * tau;
    const bool last = s + 1 == stages;
    const double tol = last ? cfg.final_tol : cfg.stage_tol;
    const auto objective = [&](const ComplexVector& a, const ComplexMatrix& m) {
      return 0.5 * (a - targets).squaredNorm() + lambda * m.trace().real();
    };

    ComplexMatrix y = l;
    ComplexVector ay = al;
    double momentum = 1.0;
    double f_l = objective(al, l);
    int it = 0;
    for (; it < cfg.max_inner; ++it) {
      const ComplexVector resid = ay - targets;
      ComplexMatrix grad = op.adjoint(resid);
      if (lambda != 0.0) grad += lambda * identity;
      const double f_y = objective(ay, y);

      ComplexMatrix z;
      ComplexVector az;
      double f_z = 0.0;
      for (int bt = 0; bt < 60; ++bt) {
        z = detail::project_psd(y - step * grad);
        az = op.apply(z);
        f_z = objective(az, z);
        const ComplexMatrix d = z - y;
        const double model = f_y + (grad.conjugate().cwiseProduct(d)).sum().real() + 0.5 * d.squaredNorm() / step;
        if (f_z <= model + 1e-14 * std::abs(f_y)) break;
        step *= 0.5;
      }

      const double change = (z - l).norm() / std::max({z.norm(), l.norm(), scale_floor});
      if (f_z > f_l) {
        // a plain gradient step from l that does not descend means l is a fixed point
        if (momentum == 1.0 || change < tol) break;
        momentum = 1.0;
        y = l;
        ay = al;
        continue;
      }
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / next;
      y = z + beta * (z - l);
      ay = az + beta * (az - al);
      momentum = next;
      l = std::move(z);
      al = std::move(az);
      f_l = f_z;
      if (change < tol) {
        ++it;
        break;
      }
    }
    res.iterations += it;

    PliStageLog log;
    log.stage = static_cast<int>(s);
    log.lambda = cfg.penalty_schedule[s];
    log.feas_residual = (al - targets).norm() / target_norm;
    log.trace = l.trace().real();
    log.rank_estimate = LiftedMatrix{l}.rank_estimate();
    log.iterations = it;
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.stages.push_back(log);
  }

  res.lifted.values = l;
  res.feas_residual = (al - targets).norm() / target_norm;
  res.converged = res.feas_residual <= cfg.feas_tol;
  return res;
}

/// Leading eigenpair sqrt(lambda_1) v_1, rotated by the global phase that best
/// matches the known measurements (skipped when no phase is known).
inline ComplexVector extract_signal(const LiftedMatrix& lifted, const Observations& obs, const GaborSystem& sys) {
  if (lifted.dim() != sys.signal_length()) throw DimensionError("extract_signal: size mismatch");
  const ComplexMatrix h = 0.5 * (lifted.values + lifted.values.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const Eigen::Index top = h.rows() - 1;
  const double lambda1 = es.eigenvalues()[top];
  if (!(lambda1 > 0.0)) throw DegenerateError("extract_signal: largest eigenvalue is not positive");
  ComplexVector x = std::sqrt(lambda1) * es.eigenvectors().col(top);

  const auto known = obs.mask().support(true);
  if (known.empty()) return x;
  const Coefficients s = stft(sys, x);
  Complex align{0.0, 0.0};
  for (int k : known) align += std::conj(s[k]) * obs.measurement(k);
  if (std::abs(align) > 0.0) x *= align / std::abs(align);
  return x;
}

}  // namespace phase_inpaint
