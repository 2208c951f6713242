#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phase_inpaint/gabor.hpp"
#include "phase_inpaint/masks.hpp"

namespace phase_inpaint {

namespace testing {
struct ObservationsAccess;
}

/// Phase inpainting data: magnitudes everywhere, complex measurements on the
/// known-phase support. Off-support measurements are never exposed to solvers;
/// only testing::ObservationsAccess can read them back for oracle checks.
class Observations {
 public:
  /// Builds observations from measurements that are only meaningful on the
  /// mask support (entries elsewhere are ignored) and magnitudes everywhere.
  static Observations from_known(const GaborSystem& sys, const Coefficients& known_b,
                                 const RealMatrix& magnitudes, const BinaryMask& mask) {
    check_shapes(sys, known_b, magnitudes, mask);
    if ((magnitudes.array() < 0.0).any() || !magnitudes.allFinite())
      throw ConfigError("observations: magnitudes must be finite and nonnegative");
    Coefficients b(sys.bins(), sys.frames());
    for (Eigen::Index k = 0; k < b.size(); ++k) {
      if (!mask.known(k)) continue;
      b[k] = known_b[k];
      const double r = magnitudes.data()[k];
      if (std::abs(std::abs(b[k]) - r) > 1e-12 * std::max(1.0, r))
        throw ConfigError("observations: |b| != r on a known cell");
    }
    return Observations(sys, std::move(b), magnitudes, mask);
  }

  [[nodiscard]] const GaborSystem& system() const { return sys_; }
  [[nodiscard]] const BinaryMask& mask() const { return mask_; }
  [[nodiscard]] const RealMatrix& magnitudes() const { return r_; }
  [[nodiscard]] double magnitude(Eigen::Index k) const { return r_.data()[k]; }
  [[nodiscard]] int bins() const { return sys_.bins(); }
  [[nodiscard]] int frames() const { return sys_.frames(); }
  [[nodiscard]] int size() const { return sys_.coefficient_count(); }

  [[nodiscard]] bool known(Eigen::Index k) const { return mask_.known(k); }

  /// b[k] for a known cell; IndexError otherwise.
  [[nodiscard]] Complex measurement(Eigen::Index k) const {
    if (k < 0 || k >= b_.size()) throw IndexError("observations: cell index out of range");
    if (!mask_.known(k)) throw IndexError("observations: phase of cell " + std::to_string(k) + " is not observed");
    return b_[k];
  }

  /// Measurements on the support, zero elsewhere.
  [[nodiscard]] Coefficients known_measurements() const {
    Coefficients out(bins(), frames());
    for (Eigen::Index k = 0; k < out.size(); ++k)
      if (mask_.known(k)) out[k] = b_[k];
    return out;
  }

  friend Observations observe(const GaborSystem& sys, const ComplexVector& x, const BinaryMask& m);
  friend struct testing::ObservationsAccess;

 private:
  Observations(GaborSystem sys, Coefficients b, RealMatrix r, BinaryMask m)
      : sys_(std::move(sys)), b_(std::move(b)), r_(std::move(r)), mask_(std::move(m)) {}

  static void check_shapes(const GaborSystem& sys, const Coefficients& b, const RealMatrix& r,
                           const BinaryMask& m) {
    const auto ok = [&](Eigen::Index rows, Eigen::Index cols) {
      return rows == sys.bins() && cols == sys.frames();
    };
    if (!ok(b.bins(), b.frames()) || !ok(r.rows(), r.cols()) || !ok(m.bins(), m.frames()))
      throw DimensionError("observations: shapes must all be F x T of the Gabor system");
  }

  GaborSystem sys_;
  Coefficients b_;
  RealMatrix r_;
  BinaryMask mask_;
};

/// b = stft(x) (authoritative on the support of m), r = |stft(x)| everywhere.
inline Observations observe(const GaborSystem& sys, const ComplexVector& x, const BinaryMask& m) {
  if (x.size() != sys.signal_length()) throw DimensionError("observe: signal length mismatch");
  if (m.bins() != sys.bins() || m.frames() != sys.frames())
    throw DimensionError("observe: mask shape does not match the Gabor system");
  Coefficients b = stft(sys, x);
  RealMatrix r = b.matrix().cwiseAbs();
  return Observations(sys, std::move(b), std::move(r), m);
}

inline Observations observe(const GaborSystem& sys, const RealVector& x, const BinaryMask& m) {
  return observe(sys, ComplexVector(x.cast<Complex>()), m);
}

namespace testing {
/// Oracle access for test harnesses and experiment scoring.
struct ObservationsAccess {
  static const Coefficients& full_measurements(const Observations& obs) { return obs.b_; }
};
}  // namespace testing

/// Random phase inpainting: r exp(i phi) with phi = arg b on the support and
/// i.i.d. uniform on [0, 2 pi) elsewhere.
inline Coefficients rpi_fill(const Observations& obs, std::uint64_t seed) {
  auto rng = make_rng(seed, stream::kRandomFill);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  Coefficients y(obs.bins(), obs.frames());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double phi = obs.known(k) ? std::arg(obs.measurement(k)) : angle(rng);
    y[k] = std::polar(obs.magnitude(k), phi);
  }
  return y;
}

// Directory layout: b.csv (t,nu,re,im; known cells only), r.csv and mask.csv
// (F rows x T columns), sys.json.

inline nlohmann::json system_to_json(const GaborSystem& sys) {
  std::vector<double> w(sys.window().data(), sys.window().data() + sys.window().size());
  return {{"window", w},
          {"hop", sys.hop()},
          {"bins", sys.bins()},
          {"frames", sys.frames()},
          {"signal_len", sys.signal_length()}};
}

inline GaborSystem system_from_json(const nlohmann::json& j) {
  const auto w = j.at("window").get<std::vector<double>>();
  const GaborSystem sys = make_gabor_system(Eigen::Map<const RealVector>(w.data(), static_cast<Eigen::Index>(w.size())),
                                            j.at("hop").get<int>(), j.at("bins").get<int>(),
                                            j.at("signal_len").get<int>());
  if (j.contains("frames") && j.at("frames").get<int>() != sys.frames())
    throw ConfigError("sys.json: frames inconsistent with signal_len / hop");
  return sys;
}

inline void write_real_grid_csv(const std::string& path, const RealMatrix& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) out << (j ? "," : "") << format_double(g(i, j));
    out << '\n';
  }
}

inline RealMatrix read_real_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) throw DimensionError(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DimensionError(path + ": empty");
  RealMatrix g(rows.size(), rows.front().size());
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rows[i][j];
  return g;
}

inline void write_observations(const std::filesystem::path& dir, const Observations& obs) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "b.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "b.csv").string());
    out << "t,nu,re,im\n";
    for (int t = 0; t < obs.frames(); ++t)
      for (int nu = 0; nu < obs.bins(); ++nu) {
        const int k = flat_index(obs.bins(), t, nu);
        if (!obs.known(k)) continue;
        const Complex v = obs.measurement(k);
        out << t << ',' << nu << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
      }
  }
  write_real_grid_csv((dir / "r.csv").string(), obs.magnitudes());
  write_mask_csv((dir / "mask.csv").string(), obs.mask());
  std::ofstream(dir / "sys.json") << system_to_json(obs.system()).dump(2) << '\n';
}

inline Observations read_observations(const std::filesystem::path& dir) {
  std::ifstream sys_in(dir / "sys.json");
  if (!sys_in) throw std::runtime_error("cannot read " + (dir / "sys.json").string());
  const GaborSystem sys = system_from_json(nlohmann::json::parse(sys_in));
  const BinaryMask mask = read_mask_csv((dir / "mask.csv").string());
  const RealMatrix r = read_real_grid_csv((dir / "r.csv").string());
  Coefficients b(sys.bins(), sys.frames());
  std::ifstream in(dir / "b.csv");
  if (!in) throw std::runtime_error("cannot read " + (dir / "b.csv").string());
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[4];
    for (auto& s : f) std::getline(ss, s, ',');
    const int t = std::stoi(f[0]);
    const int nu = std::stoi(f[1]);
    if (t < 0 || t >= sys.frames() || nu < 0 || nu >= sys.bins())
      throw IndexError("b.csv: cell outside the grid");
    b(nu, t) = Complex(std::stod(f[2]), std::stod(f[3]));
  }
  return Observations::from_known(sys, b, r, mask);
}

}  // namespace phase_inpaint
