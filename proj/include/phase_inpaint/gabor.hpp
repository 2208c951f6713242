#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "phase_inpaint/common.hpp"

namespace phase_inpaint {

/// Periodic Hann window w[n] = 0.5 (1 - cos(2 pi n / L)).
inline RealVector hann_window(int length) {
  if (length <= 0) throw ConfigError("hann_window: length must be positive");
  RealVector w(length);
  for (int n = 0; n < length; ++n) w[n] = 0.5 * (1.0 - std::cos(kTwoPi * n / length));
  return w;
}

/// F x T complex time-frequency array. Row index is the frequency bin, column
/// index the frame, so the column-major storage order is the canonical
/// flattening k = t * F + nu used throughout the library.
class Coefficients {
 public:
  Coefficients() = default;
  Coefficients(int bins, int frames) : values_(ComplexMatrix::Zero(bins, frames)) {}
  explicit Coefficients(ComplexMatrix values) : values_(std::move(values)) {}

  static Coefficients from_flat(int bins, int frames, const ComplexVector& flat) {
    if (flat.size() != static_cast<Eigen::Index>(bins) * frames)
      throw DimensionError("Coefficients::from_flat: length does not match F*T");
    return Coefficients(Eigen::Map<const ComplexMatrix>(flat.data(), bins, frames));
  }

  [[nodiscard]] int bins() const { return static_cast<int>(values_.rows()); }
  [[nodiscard]] int frames() const { return static_cast<int>(values_.cols()); }
  [[nodiscard]] Eigen::Index size() const { return values_.size(); }

  Complex& operator()(int nu, int t) { return values_(nu, t); }
  Complex operator()(int nu, int t) const { return values_(nu, t); }
  Complex& operator[](Eigen::Index k) { return values_.data()[k]; }
  Complex operator[](Eigen::Index k) const { return values_.data()[k]; }

  [[nodiscard]] const ComplexMatrix& matrix() const { return values_; }
  ComplexMatrix& matrix() { return values_; }

  [[nodiscard]] ComplexVector flat() const {
    return Eigen::Map<const ComplexVector>(values_.data(), values_.size());
  }
  [[nodiscard]] Eigen::Map<const ComplexVector> flat_view() const {
    return {values_.data(), values_.size()};
  }

  [[nodiscard]] double norm() const { return values_.norm(); }

 private:
  ComplexMatrix values_;
};

inline int flat_index(int bins, int t, int nu) { return t * bins + nu; }

/// Painless-case Gabor frame with circular framing:
///   a_{t,nu}[n] = w[(n - t h) mod N] exp(2 i pi nu n / F).
/// Immutable once built; copies share the precomputed frame diagonal.
class GaborSystem {
 public:
  [[nodiscard]] const RealVector& window() const { return state_->window; }
  [[nodiscard]] int window_length() const { return static_cast<int>(state_->window.size()); }
  [[nodiscard]] int hop() const { return state_->hop; }
  [[nodiscard]] int bins() const { return state_->bins; }
  [[nodiscard]] int frames() const { return state_->frames; }
  [[nodiscard]] int signal_length() const { return state_->signal_len; }
  [[nodiscard]] int coefficient_count() const { return state_->bins * state_->frames; }

  /// Diagonal of the frame operator M^H M, s[n] = F * sum_t w[(n - t h) mod N]^2.
  [[nodiscard]] const RealVector& frame_diagonal() const { return state_->frame_diag; }
  /// e^{2 i pi j / F} for j = 0..F-1.
  [[nodiscard]] const ComplexVector& twiddles() const { return state_->twiddle; }

  friend GaborSystem make_gabor_system(const RealVector& window, int hop, int bins, int signal_len);

 private:
  struct State {
    RealVector window;
    int hop = 0;
    int bins = 0;
    int frames = 0;
    int signal_len = 0;
    RealVector frame_diag;
    ComplexVector twiddle;
  };
  explicit GaborSystem(std::shared_ptr<const State> s) : state_(std::move(s)) {}
  std::shared_ptr<const State> state_;
};

/// Validates the configuration and precomputes the frame diagonal.
/// Throws ConfigError naming the violated condition.
inline GaborSystem make_gabor_system(const RealVector& window, int hop, int bins, int signal_len) {
  const auto len = static_cast<int>(window.size());
  if (len == 0) throw ConfigError("gabor: window is empty");
  if (!window.allFinite()) throw ConfigError("gabor: window has non-finite samples");
  if (window.cwiseAbs().maxCoeff() == 0.0) throw ConfigError("gabor: window is identically zero");
  if (hop <= 0) throw ConfigError("gabor: hop must be positive");
  if (bins <= 0) throw ConfigError("gabor: bins must be positive");
  if (signal_len <= 0) throw ConfigError("gabor: signal length must be positive");
  if (signal_len % hop != 0)
    throw ConfigError("gabor: signal length " + std::to_string(signal_len) +
                      " is not a multiple of hop " + std::to_string(hop) + " (T*h = N violated)");
  if (bins < len)
    throw ConfigError("gabor: bins " + std::to_string(bins) + " < window length " +
                      std::to_string(len) + " (painless condition F >= L violated)");
  if (len > signal_len) throw ConfigError("gabor: window longer than the signal");

  auto st = std::make_shared<GaborSystem::State>();
  st->window = window;
  st->hop = hop;
  st->bins = bins;
  st->frames = signal_len / hop;
  st->signal_len = signal_len;
  st->frame_diag = RealVector::Zero(signal_len);
  for (int t = 0; t < st->frames; ++t)
    for (int m = 0; m < len; ++m) st->frame_diag[(t * hop + m) % signal_len] += window[m] * window[m];
  st->frame_diag *= bins;
  if (st->frame_diag.minCoeff() <= 0.0)
    throw ConfigError("gabor: some samples are not covered by any window (frame operator singular)");
  st->twiddle.resize(bins);
  for (int j = 0; j < bins; ++j) st->twiddle[j] = std::polar(1.0, kTwoPi * j / bins);
  return GaborSystem(std::move(st));
}

/// Gabor atom a_{t,nu} as a length-N vector.
inline ComplexVector atom(const GaborSystem& sys, int t, int nu) {
  if (t < 0 || t >= sys.frames() || nu < 0 || nu >= sys.bins())
    throw IndexError("atom: (t, nu) = (" + std::to_string(t) + ", " + std::to_string(nu) +
                     ") outside the time-frequency grid");
  const int n_len = sys.signal_length();
  const int f = sys.bins();
  ComplexVector a = ComplexVector::Zero(n_len);
  for (int m = 0; m < sys.window_length(); ++m) {
    const int n = (t * sys.hop() + m) % n_len;
    const auto phase = static_cast<int>((static_cast<long long>(nu) * n) % f);
    a[n] = sys.window()[m] * sys.twiddles()[phase];
  }
  return a;
}

/// STFT[t,nu] = <x, a_{t,nu}> = a_{t,nu}^H x, computed frame by frame.
inline Coefficients stft(const GaborSystem& sys, const ComplexVector& x) {
  if (x.size() != sys.signal_length())
    throw DimensionError("stft: signal length " + std::to_string(x.size()) + " != " +
                         std::to_string(sys.signal_length()));
  const int f = sys.bins();
  const int n_len = sys.signal_length();
  const auto& w = sys.window();
  const auto& tw = sys.twiddles();
  Coefficients c(f, sys.frames());
  for (int t = 0; t < sys.frames(); ++t) {
    for (int m = 0; m < sys.window_length(); ++m) {
      if (w[m] == 0.0) continue;
      const int n = (t * sys.hop() + m) % n_len;
      const Complex v = x[n] * w[m];
      const int step = n % f;
      int phase = 0;
      for (int nu = 0; nu < f; ++nu) {
        c(nu, t) += v * std::conj(tw[phase]);
        phase += step;
        if (phase >= f) phase -= f;
      }
    }
  }
  return c;
}

inline Coefficients stft(const GaborSystem& sys, const RealVector& x) {
  return stft(sys, ComplexVector(x.cast<Complex>()));
}

/// Least-squares synthesis M^+ flatten(C). In the painless case M^H M is the
/// diagonal frame_diagonal(), so M^+ = diag(s)^{-1} M^H.
inline ComplexVector istft(const GaborSystem& sys, const Coefficients& c) {
  if (c.bins() != sys.bins() || c.frames() != sys.frames())
    throw DimensionError("istft: coefficient shape does not match the Gabor system");
  const int f = sys.bins();
  const int n_len = sys.signal_length();
  const auto& w = sys.window();
  const auto& tw = sys.twiddles();
  ComplexVector x = ComplexVector::Zero(n_len);
  for (int t = 0; t < sys.frames(); ++t) {
    for (int m = 0; m < sys.window_length(); ++m) {
      if (w[m] == 0.0) continue;
      const int n = (t * sys.hop() + m) % n_len;
      const int step = n % f;
      int phase = 0;
      Complex acc{0.0, 0.0};
      for (int nu = 0; nu < f; ++nu) {
        acc += c(nu, t) * tw[phase];
        phase += step;
        if (phase >= f) phase -= f;
      }
      x[n] += w[m] * acc;
    }
  }
  return x.cwiseQuotient(sys.frame_diagonal().cast<Complex>());
}

/// Dense FT x N analysis matrix; row k = t F + nu holds a_{t,nu}^H.
inline ComplexMatrix atom_matrix(const GaborSystem& sys) {
  ComplexMatrix m(sys.coefficient_count(), sys.signal_length());
  for (int t = 0; t < sys.frames(); ++t)
    for (int nu = 0; nu < sys.bins(); ++nu)
      m.row(flat_index(sys.bins(), t, nu)) = atom(sys, t, nu).adjoint();
  return m;
}

/// Dense N x FT pseudo-inverse diag(s)^{-1} M^H.
inline ComplexMatrix synthesis_matrix(const GaborSystem& sys) {
  ComplexMatrix mh = atom_matrix(sys).adjoint();
  return sys.frame_diagonal().cwiseInverse().cast<Complex>().asDiagonal() * mh;
}

/// Orthogonal projection onto the range of the analysis operator, STFT(STFT^-1(C)).
inline Coefficients consistency_projection(const GaborSystem& sys, const Coefficients& c) {
  return stft(sys, istft(sys, c));
}

}  // namespace phase_inpaint
