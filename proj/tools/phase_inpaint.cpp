// phase-inpaint: run sweeps, solve single instances, generate instances.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phase_inpaint.hpp"

namespace pi = phase_inpaint;

namespace {

constexpr int kExitConfig = 2;

void print_summary(const std::vector<pi::ResultRow>& rows) {
  std::printf("%-12s %-6s %3s %12s %12s %12s\n", "sweep_param", "method", "n", "median_db", "min_db", "max_db");
  for (const auto& s : pi::summarize(rows))
    std::printf("%-12g %-6s %3d %12.2f %12.2f %12.2f\n", s.sweep_param, pi::to_string(s.method).c_str(), s.n,
                s.median_db, s.min_db, s.max_db);
}

void write_complex_csv(const std::string& path, const pi::ComplexVector& x) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "re,im\n";
  for (const auto& v : x) out << pi::format_double(v.real()) << ',' << pi::format_double(v.imag()) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase inpainting: GLI, PLI, PCI and RPI reconstruction from STFT magnitudes and partial phases"};
  app.require_subcommand(1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a missing-ratio or hole-width sweep and write CSV results");
  std::string kind;
  std::optional<std::string> config_path, out_dir, methods;
  std::optional<int> workers, trials;
  std::optional<std::uint64_t> base_seed;
  bool quiet = false;
  sweep->add_option("--kind", kind, "ratio or hole")->required();
  sweep->add_option("--config", config_path, "JSON experiment config");
  sweep->add_option("--out", out_dir, "output directory (overrides output_dir)");
  sweep->add_option("--workers", workers, "concurrent trials");
  sweep->add_option("--methods", methods, "comma-separated subset of gli,pli,pci,rpi");
  sweep->add_option("--trials", trials, "trials per sweep point");
  sweep->add_option("--seed", base_seed, "base seed");
  sweep->add_flag("--quiet", quiet, "do not print the summary table");

  // solve
  auto* solve = app.add_subcommand("solve", "Reconstruct one signal from an observation directory");
  std::string obs_dir, method_name, solve_out = "x_hat.csv";
  std::optional<std::string> solve_config, truth_path;
  std::uint64_t solve_seed = 0;
  solve->add_option("--obs", obs_dir, "directory with b.csv, r.csv, mask.csv, sys.json")->required();
  solve->add_option("--method", method_name, "gli, pli, pci or rpi")->required();
  solve->add_option("--config", solve_config, "JSON config whose gli/pli/pci blocks are used");
  solve->add_option("--seed", solve_seed, "seed for GLI initial phases and RPI fill");
  solve->add_option("--out", solve_out, "output CSV of the complex estimate");
  solve->add_option("--truth", truth_path, "reference signal CSV; prints the error in dB");

  // make-obs
  auto* make = app.add_subcommand("make-obs", "Write a benchmark instance as an observation directory");
  std::string make_out;
  double ratio = 0.3;
  int width = 0;
  std::uint64_t make_seed = 0;
  make->add_option("--out", make_out, "directory to create")->required();
  make->add_option("--ratio", ratio, "fraction of cells with unknown phase");
  make->add_option("--width", width, "hole width; 0 draws cells independently");
  make->add_option("--seed", make_seed, "seed for noise and mask");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sweep) {
      pi::ExperimentConfig cfg = config_path ? pi::load_config(*config_path) : pi::ExperimentConfig{};
      cfg.sweep = pi::sweep_kind_from_string(kind);
      if (out_dir) cfg.output_dir = *out_dir;
      if (workers) cfg.workers = *workers;
      if (methods) cfg.methods = pi::parse_methods(*methods);
      if (trials) cfg.n_trials = *trials;
      if (base_seed) cfg.base_seed = *base_seed;
      pi::validate(cfg);
      const auto rows = pi::run_sweep(cfg);
      pi::emit(rows, cfg, cfg.output_dir);
      if (!quiet) print_summary(rows);
    } else if (*solve) {
      const pi::ExperimentConfig cfg = solve_config ? pi::load_config(*solve_config) : pi::ExperimentConfig{};
      const pi::Method method = pi::method_from_string(method_name);
      const pi::Observations obs = pi::read_observations(obs_dir);
      const auto res = pi::solve_instance(obs.system(), obs, method, cfg, solve_seed);
      write_complex_csv(solve_out, res.x_hat);
      std::printf("method %s converged %d\n", pi::to_string(method).c_str(), res.converged ? 1 : 0);
      if (truth_path) {
        const pi::RealVector x = pi::read_signal_csv(*truth_path);
        std::printf("e_db %.2f\n", pi::error_db(x, res.x_hat).e_db);
      }
    } else if (*make) {
      const auto sys = pi::benchmark_system();
      const pi::RealVector x = pi::benchmark_signal(make_seed);
      const pi::BinaryMask m = width > 0 ? pi::hole_mask(sys.bins(), sys.frames(), ratio, width, make_seed)
                                         : pi::random_mask(sys.bins(), sys.frames(), ratio, make_seed);
      pi::write_observations(make_out, pi::observe(sys, x, m));
      pi::write_signal_csv((std::filesystem::path(make_out) / "signal.csv").string(), x);
    }
  } catch (const pi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
