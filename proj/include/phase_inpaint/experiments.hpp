#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "phase_inpaint/gabor.hpp"
#include "phase_inpaint/gli.hpp"
#include "phase_inpaint/masks.hpp"
#include "phase_inpaint/metrics.hpp"
#include "phase_inpaint/observe.hpp"
#include "phase_inpaint/pci.hpp"
#include "phase_inpaint/pli.hpp"
#include "phase_inpaint/signals.hpp"

namespace phase_inpaint {

enum class Method { kGli, kPli, kPci, kRpi };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kGli: return "GLI";
    case Method::kPli: return "PLI";
    case Method::kPci: return "PCI";
    case Method::kRpi: return "RPI";
  }
  return "?";
}

inline Method method_from_string(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "GLI") return Method::kGli;
  if (s == "PLI") return Method::kPli;
  if (s == "PCI") return Method::kPci;
  if (s == "RPI") return Method::kRpi;
  throw ConfigError("unknown method '" + s + "' (expected gli, pli, pci or rpi)");
}

/// Comma-separated list such as "gli,pci".
inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(method_from_string(item));
  if (out.empty()) throw ConfigError("method list is empty");
  return out;
}

enum class SweepKind { kRatio, kHoleWidth };

inline std::string to_string(SweepKind k) { return k == SweepKind::kRatio ? "ratio" : "hole_width"; }

inline SweepKind sweep_kind_from_string(const std::string& s) {
  if (s == "ratio") return SweepKind::kRatio;
  if (s == "hole" || s == "hole_width") return SweepKind::kHoleWidth;
  throw ConfigError("unknown sweep kind '" + s + "' (expected ratio or hole)");
}

// The Gabor setup and test signal are fixed: Hann 16, hop 8, 32 bins, N = 128.
inline constexpr int kBenchWindow = 16;
inline constexpr int kBenchHop = 8;
inline constexpr int kBenchBins = 32;
inline constexpr int kBenchLength = 128;

inline GaborSystem benchmark_system() {
  return make_gabor_system(hann_window(kBenchWindow), kBenchHop, kBenchBins, kBenchLength);
}

struct ExperimentConfig {
  SweepKind sweep = SweepKind::kRatio;
  std::vector<double> ratios{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<int> widths{1, 3, 5, 7, 9};
  double fixed_ratio = 0.3;
  std::vector<Method> methods{Method::kGli, Method::kPli, Method::kPci, Method::kRpi};
  int n_trials = 5;
  std::uint64_t base_seed = 0;
  GliConfig gli;
  PliConfig pli;
  PciConfig pci;
  /// Sweep points at which PLI and PCI run; empty means every point.
  std::vector<double> sdp_points;
  std::string output_dir = "results";
  int workers = 1;
  /// Write wall-clock seconds into results.csv. Off by default so that
  /// results.csv is byte-identical across runs; timings.csv always has them.
  bool record_seconds = false;

  [[nodiscard]] std::uint64_t trial_seed(int trial) const { return base_seed + static_cast<std::uint64_t>(trial); }

  /// Sweep parameter values in run order.
  [[nodiscard]] std::vector<double> points() const {
    if (sweep == SweepKind::kRatio) return ratios;
    return {widths.begin(), widths.end()};
  }

  [[nodiscard]] bool runs_sdp_at(double point) const {
    if (sdp_points.empty()) return true;
    return std::any_of(sdp_points.begin(), sdp_points.end(),
                       [&](double p) { return std::abs(p - point) < 1e-9; });
  }
};

inline void validate(const ExperimentConfig& cfg) {
  for (double r : cfg.ratios)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("config: ratios must lie in [0, 1]");
  for (int w : cfg.widths)
    if (w < 1 || w > std::min(kBenchBins, kBenchWindow))
      throw ConfigError("config: widths must lie in [1, " + std::to_string(std::min(kBenchBins, kBenchWindow)) + "]");
  if (!(cfg.fixed_ratio >= 0.0 && cfg.fixed_ratio <= 1.0))
    throw ConfigError("config: fixed_ratio must lie in [0, 1]");
  if (cfg.n_trials < 1) throw ConfigError("config: n_trials must be >= 1");
  if (cfg.workers < 1) throw ConfigError("config: workers must be >= 1");
  if (cfg.methods.empty()) throw ConfigError("config: methods must not be empty");
  if (cfg.points().empty()) throw ConfigError("config: the sweep has no points");
  if (cfg.gli.n_iter < 1) throw ConfigError("config: gli.n_iter must be >= 1");
  if (cfg.pli.max_inner < 1 || cfg.pli.max_outer < 1) throw ConfigError("config: pli iteration caps must be >= 1");
  if (cfg.pli.penalty_schedule.empty()) throw ConfigError("config: pli.penalty_schedule must not be empty");
  detail::check_pci_config(cfg.pci);
}

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : cfg.methods) methods.push_back(to_string(m));
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.n_trials; ++i) seeds.push_back(cfg.trial_seed(i));
  return {
      {"sweep", to_string(cfg.sweep)},
      {"ratios", cfg.ratios},
      {"widths", cfg.widths},
      {"fixed_ratio", cfg.fixed_ratio},
      {"methods", methods},
      {"n_trials", cfg.n_trials},
      {"base_seed", cfg.base_seed},
      {"trial_seeds", seeds},
      {"sdp_points", cfg.sdp_points},
      {"output_dir", cfg.output_dir},
      {"workers", cfg.workers},
      {"record_seconds", cfg.record_seconds},
      {"system",
       {{"window", "hann"}, {"window_length", kBenchWindow}, {"hop", kBenchHop}, {"bins", kBenchBins},
        {"signal_length", kBenchLength}}},
      {"gli", {{"n_iter", cfg.gli.n_iter}, {"residual_tol", cfg.gli.residual_tol}}},
      {"pli",
       {{"constraint_mode", to_string(cfg.pli.constraint_mode)},
        {"max_outer", cfg.pli.max_outer},
        {"max_inner", cfg.pli.max_inner},
        {"penalty_schedule", cfg.pli.penalty_schedule},
        {"feas_tol", cfg.pli.feas_tol},
        {"obj_tol", cfg.pli.obj_tol},
        {"stage_tol", cfg.pli.stage_tol},
        {"final_tol", cfg.pli.final_tol}}},
      {"pci",
       {{"max_sweeps", cfg.pci.max_sweeps},
        {"obj_tol", cfg.pci.obj_tol},
        {"nu", cfg.pci.nu},
        {"zero_mag_eps", cfg.pci.zero_mag_eps}}},
  };
}

/// Parses a config; missing keys keep their defaults, unknown keys are
/// rejected. "trial_seeds" and "system" are accepted as informational so an
/// emitted config.json can be fed back in.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read_if;
  detail::check_keys(j,
                     {"sweep", "ratios", "widths", "fixed_ratio", "methods", "n_trials", "base_seed", "trial_seeds",
                      "sdp_points", "output_dir", "workers", "record_seconds", "system", "gli", "pli", "pci"},
                     "config");
  ExperimentConfig cfg;
  if (j.contains("sweep")) {
    std::string s;
    read_if(j, "sweep", s);
    cfg.sweep = sweep_kind_from_string(s);
  }
  read_if(j, "ratios", cfg.ratios);
  read_if(j, "widths", cfg.widths);
  read_if(j, "fixed_ratio", cfg.fixed_ratio);
  if (j.contains("methods")) {
    std::vector<std::string> names;
    read_if(j, "methods", names);
    cfg.methods.clear();
    for (const auto& n : names) cfg.methods.push_back(method_from_string(n));
  }
  read_if(j, "n_trials", cfg.n_trials);
  read_if(j, "base_seed", cfg.base_seed);
  read_if(j, "sdp_points", cfg.sdp_points);
  read_if(j, "output_dir", cfg.output_dir);
  read_if(j, "workers", cfg.workers);
  read_if(j, "record_seconds", cfg.record_seconds);
  if (j.contains("gli")) {
    const auto& g = j.at("gli");
    detail::check_keys(g, {"n_iter", "residual_tol"}, "gli");
    read_if(g, "n_iter", cfg.gli.n_iter);
    read_if(g, "residual_tol", cfg.gli.residual_tol);
  }
  if (j.contains("pli")) {
    const auto& p = j.at("pli");
    detail::check_keys(p, {"constraint_mode", "max_outer", "max_inner", "penalty_schedule", "feas_tol", "obj_tol",
                           "stage_tol", "final_tol"},
                       "pli");
    if (p.contains("constraint_mode")) {
      std::string mode;
      read_if(p, "constraint_mode", mode);
      cfg.pli.constraint_mode = constraint_mode_from_string(mode);
    }
    read_if(p, "max_outer", cfg.pli.max_outer);
    read_if(p, "max_inner", cfg.pli.max_inner);
    read_if(p, "penalty_schedule", cfg.pli.penalty_schedule);
    read_if(p, "feas_tol", cfg.pli.feas_tol);
    read_if(p, "obj_tol", cfg.pli.obj_tol);
    read_if(p, "stage_tol", cfg.pli.stage_tol);
    read_if(p, "final_tol", cfg.pli.final_tol);
  }
  if (j.contains("pci")) {
    const auto& p = j.at("pci");
    detail::check_keys(p, {"max_sweeps", "obj_tol", "nu", "zero_mag_eps"}, "pci");
    read_if(p, "max_sweeps", cfg.pci.max_sweeps);
    read_if(p, "obj_tol", cfg.pci.obj_tol);
    read_if(p, "nu", cfg.pci.nu);
    read_if(p, "zero_mag_eps", cfg.pci.zero_mag_eps);
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

struct SolveOutcome {
  ComplexVector x_hat;
  bool converged = false;
};

/// Runs one method on one instance. Solver failures (e.g. a degenerate lifted
/// matrix) give x_hat = 0, which scores 0 dB, and converged = false.
inline SolveOutcome solve_instance(const GaborSystem& sys, const Observations& obs, Method method,
                                   const ExperimentConfig& cfg, std::uint64_t seed) {
  SolveOutcome out;
  try {
    switch (method) {
      case Method::kGli: {
        GliConfig g = cfg.gli;
        g.init_seed = seed;
        g.record_trace = false;
        const auto r = gli_run(sys, obs, g);
        out.x_hat = r.x_hat;
        out.converged = r.iterations_run < g.n_iter;
        break;
      }
      case Method::kPli: {
        const auto r = pli_solve(sys, obs, cfg.pli);
        out.x_hat = extract_signal(r.lifted, obs, sys);
        out.converged = r.converged;
        break;
      }
      case Method::kPci: {
        const auto r = pci_solve(build_gamma(sys, obs), obs, cfg.pci);
        out.x_hat = pci_signal(sys, obs, extract_phases(r.phases));
        out.converged = r.converged;
        break;
      }
      case Method::kRpi:
        out.x_hat = istft(sys, rpi_fill(obs, seed));
        out.converged = true;
        break;
    }
  } catch (const DegenerateError&) {
    out.x_hat = ComplexVector::Zero(sys.signal_length());
    out.converged = false;
  }
  return out;
}

struct ResultRow {
  double sweep_param = 0.0;
  Method method = Method::kGli;
  int trial = 0;
  double e_db = 0.0;
  double seconds = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
};

inline bool row_order(const ResultRow& a, const ResultRow& b) {
  if (a.sweep_param != b.sweep_param) return a.sweep_param < b.sweep_param;
  if (a.method != b.method) return a.method < b.method;
  return a.trial < b.trial;
}

namespace detail {

/// Mask of one sweep point and trial; every method at that point sees it.
inline BinaryMask sweep_mask(const ExperimentConfig& cfg, double point, std::uint64_t seed) {
  if (cfg.sweep == SweepKind::kRatio) return random_mask(kBenchBins, kBenchLength / kBenchHop, point, seed);
  return hole_mask(kBenchBins, kBenchLength / kBenchHop, cfg.fixed_ratio, static_cast<int>(point), seed);
}

inline std::vector<ResultRow> run_point_trial(const ExperimentConfig& cfg, const GaborSystem& sys, double point,
                                              int trial) {
  const std::uint64_t seed = cfg.trial_seed(trial);
  const RealVector x = benchmark_signal(seed);
  const Observations obs = observe(sys, x, sweep_mask(cfg, point, seed));
  std::vector<ResultRow> rows;
  for (Method m : cfg.methods) {
    if ((m == Method::kPli || m == Method::kPci) && !cfg.runs_sdp_at(point)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const SolveOutcome s = solve_instance(sys, obs, m, cfg, seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back({point, m, trial, error_db(x, s.x_hat).e_db, secs, s.converged, seed});
  }
  return rows;
}

}  // namespace detail

/// Runs every (point, trial) task on cfg.workers threads; rows come back sorted
/// by (sweep_param, method, trial) whatever the completion order.
inline std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  const GaborSystem sys = benchmark_system();
  const auto pts = cfg.points();
  const auto n_tasks = pts.size() * static_cast<std::size_t>(cfg.n_trials);

  std::vector<std::vector<ResultRow>> per_task(n_tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n_tasks; i = next++) {
      try {
        per_task[i] = detail::run_point_trial(cfg, sys, pts[i / cfg.n_trials], static_cast<int>(i % cfg.n_trials));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(cfg.workers, static_cast<int>(n_tasks));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<ResultRow> rows;
  for (auto& v : per_task) rows.insert(rows.end(), v.begin(), v.end());
  std::sort(rows.begin(), rows.end(), row_order);
  return rows;
}

inline std::vector<ResultRow> run_ratio_sweep(ExperimentConfig cfg) {
  cfg.sweep = SweepKind::kRatio;
  return run_sweep(cfg);
}

inline std::vector<ResultRow> run_hole_sweep(ExperimentConfig cfg) {
  cfg.sweep = SweepKind::kHoleWidth;
  return run_sweep(cfg);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct SummaryRow {
  double sweep_param = 0.0;
  Method method = Method::kGli;
  int n = 0;
  double median_db = 0.0;
  double min_db = 0.0;
  double max_db = 0.0;
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::pair<double, Method>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.sweep_param, r.method}].push_back(r.e_db);
  std::vector<SummaryRow> out;
  for (const auto& [key, v] : groups)
    out.push_back({key.first, key.second, static_cast<int>(v.size()), median(v),
                   *std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())});
  return out;
}

/// Median e_db of one method at one sweep point; NaN if there are no rows.
inline double median_at(const std::vector<ResultRow>& rows, double point, Method m) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.method == m && std::abs(r.sweep_param - point) < 1e-9) v.push_back(r.e_db);
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : median(v);
}

inline constexpr const char* kResultsHeader = "sweep_param,method,trial,e_db,seconds,converged,seed";

/// Writes results.csv, summary.csv, plot.csv, timings.csv and config.json.
inline void emit(const std::vector<ResultRow>& unsorted, const ExperimentConfig& cfg,
                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("emit: cannot create " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("emit: cannot write " + (dir / name).string());
    return out;
  };

  std::vector<ResultRow> rows = unsorted;
  std::sort(rows.begin(), rows.end(), row_order);

  {
    auto out = open("results.csv");
    out << kResultsHeader << '\n';
    for (const auto& r : rows)
      out << format_double(r.sweep_param) << ',' << to_string(r.method) << ',' << r.trial << ','
          << format_double(r.e_db) << ',' << format_double(cfg.record_seconds ? r.seconds : 0.0) << ','
          << (r.converged ? 1 : 0) << ',' << r.seed << '\n';
  }
  {
    auto out = open("timings.csv");
    out << "sweep_param,method,trial,seconds\n";
    for (const auto& r : rows)
      out << format_double(r.sweep_param) << ',' << to_string(r.method) << ',' << r.trial << ','
          << format_double(r.seconds) << '\n';
  }
  const auto summary = summarize(rows);
  {
    auto out = open("summary.csv");
    out << "sweep_param,method,n,median_db,min_db,max_db\n";
    for (const auto& s : summary)
      out << format_double(s.sweep_param) << ',' << to_string(s.method) << ',' << s.n << ','
          << format_double(s.median_db) << ',' << format_double(s.min_db) << ',' << format_double(s.max_db) << '\n';
  }
  {
    // one line per sweep point, one median column per configured method
    auto out = open("plot.csv");
    out << "sweep_param";
    for (Method m : cfg.methods) out << ',' << to_string(m);
    out << '\n';
    std::set<double> pts;
    for (const auto& s : summary) pts.insert(s.sweep_param);
    for (double p : pts) {
      out << format_double(p);
      for (Method m : cfg.methods) {
        out << ',';
        for (const auto& s : summary)
          if (s.sweep_param == p && s.method == m) out << format_double(s.median_db);
      }
      out << '\n';
    }
  }
  {
    auto out = open("config.json");
    out << to_json(cfg).dump(2) << '\n';
  }
}

}  // namespace phase_inpaint
