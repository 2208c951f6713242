#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "phase_inpaint/common.hpp"

namespace phase_inpaint {

/// F x T known-phase mask: 1 = magnitude and phase known, 0 = magnitude only.
/// Storage is column-major, so linear index k = t * F + nu matches Coefficients.
class BinaryMask {
 public:
  using Storage = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

  BinaryMask() = default;
  BinaryMask(int bins, int frames, bool known = true)
      : values_(Storage::Constant(bins, frames, known ? 1 : 0)) {}

  [[nodiscard]] int bins() const { return static_cast<int>(values_.rows()); }
  [[nodiscard]] int frames() const { return static_cast<int>(values_.cols()); }
  [[nodiscard]] Eigen::Index size() const { return values_.size(); }

  [[nodiscard]] bool known(int nu, int t) const { return values_(nu, t) != 0; }
  [[nodiscard]] bool known(Eigen::Index k) const { return values_.data()[k] != 0; }
  void set(int nu, int t, bool known) { values_(nu, t) = known ? 1 : 0; }
  void set(Eigen::Index k, bool known) { values_.data()[k] = known ? 1 : 0; }

  [[nodiscard]] const Storage& values() const { return values_; }

  /// Flat indices of known (or missing) cells in ascending order.
  [[nodiscard]] std::vector<int> support(bool known_cells = true) const {
    std::vector<int> out;
    for (Eigen::Index k = 0; k < values_.size(); ++k)
      if ((values_.data()[k] != 0) == known_cells) out.push_back(static_cast<int>(k));
    return out;
  }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           a.values_ == b.values_;
  }

 private:
  Storage values_;
};

struct MaskStats {
  int missing_count = 0;
  double missing_ratio = 0.0;
};

inline MaskStats mask_stats(const BinaryMask& m) {
  MaskStats s;
  for (Eigen::Index k = 0; k < m.size(); ++k)
    if (!m.known(k)) ++s.missing_count;
  s.missing_ratio = m.size() ? static_cast<double>(s.missing_count) / static_cast<double>(m.size()) : 0.0;
  return s;
}

inline int missing_target(int bins, int frames, double ratio) {
  return static_cast<int>(std::lround(ratio * bins * frames));
}

inline void check_ratio(double ratio, const char* who) {
  if (!(ratio >= 0.0 && ratio <= 1.0))
    throw ConfigError(std::string(who) + ": missing ratio must lie in [0, 1]");
}

/// Exactly round(ratio F T) missing cells drawn uniformly without replacement.
inline BinaryMask random_mask(int bins, int frames, double ratio, std::uint64_t seed) {
  check_ratio(ratio, "random_mask");
  if (bins <= 0 || frames <= 0) throw ConfigError("random_mask: grid must be non-empty");
  const int total = bins * frames;
  std::vector<int> cells(total);
  std::iota(cells.begin(), cells.end(), 0);
  auto rng = make_rng(seed, stream::kMask);
  std::shuffle(cells.begin(), cells.end(), rng);
  BinaryMask m(bins, frames);
  const int target = missing_target(bins, frames, ratio);
  for (int i = 0; i < target; ++i) m.set(cells[i], false);
  return m;
}

/// One square hole: top-left corner in (frequency, frame) coordinates. Cells
/// beyond the grid border are clipped.
struct HolePlacement {
  int nu = 0;
  int t = 0;
  int width = 0;
};

struct HoleMaskResult {
  BinaryMask mask;
  std::vector<HolePlacement> holes;
  /// Cells of the last hole that were set back to known to hit the exact count.
  std::vector<int> restored;
};

/// Square width x width holes with uniformly random corners, added until at
/// least round(ratio F T) cells are missing; surplus cells opened by the last
/// hole are then restored at random so the count is exact.
inline HoleMaskResult hole_mask_with_log(int bins, int frames, double ratio, int width,
                                         std::uint64_t seed) {
  check_ratio(ratio, "hole_mask");
  if (bins <= 0 || frames <= 0) throw ConfigError("hole_mask: grid must be non-empty");
  if (width < 1 || width > std::min(bins, frames))
    throw ConfigError("hole_mask: width must lie in [1, min(F, T)]");

  HoleMaskResult out{BinaryMask(bins, frames), {}, {}};
  const int target = missing_target(bins, frames, ratio);
  auto rng = make_rng(seed, stream::kMask);
  std::uniform_int_distribution<int> pick_nu(0, bins - 1);
  std::uniform_int_distribution<int> pick_t(0, frames - 1);

  int missing = 0;
  std::vector<int> opened;
  while (missing < target) {
    const HolePlacement h{pick_nu(rng), pick_t(rng), width};
    out.holes.push_back(h);
    opened.clear();
    for (int t = h.t; t < std::min(frames, h.t + width); ++t) {
      for (int nu = h.nu; nu < std::min(bins, h.nu + width); ++nu) {
        if (out.mask.known(nu, t)) {
          out.mask.set(nu, t, false);
          opened.push_back(t * bins + nu);
          ++missing;
        }
      }
    }
  }
  if (missing > target) {
    std::shuffle(opened.begin(), opened.end(), rng);
    for (int i = 0; i < missing - target; ++i) {
      out.mask.set(opened[i], true);
      out.restored.push_back(opened[i]);
    }
  }
  return out;
}

inline BinaryMask hole_mask(int bins, int frames, double ratio, int width, std::uint64_t seed) {
  return hole_mask_with_log(bins, frames, ratio, width, seed).mask;
}

/// F rows of T comma-separated 0/1 values.
inline void write_mask_csv(const std::string& path, const BinaryMask& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int nu = 0; nu < m.bins(); ++nu) {
    for (int t = 0; t < m.frames(); ++t) out << (t ? "," : "") << (m.known(nu, t) ? 1 : 0);
    out << '\n';
  }
}

inline BinaryMask read_mask_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<int>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<int> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const int v = std::stoi(cell);
      if (v != 0 && v != 1) throw ConfigError("mask csv: entries must be 0 or 1");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DimensionError("mask csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DimensionError("mask csv: empty");
  BinaryMask m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int nu = 0; nu < m.bins(); ++nu)
    for (int t = 0; t < m.frames(); ++t) m.set(nu, t, rows[nu][t] == 1);
  return m;
}

}  // namespace phase_inpaint
