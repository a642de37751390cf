// Command-line driver: run / check / plot.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

#include "tslt/campaign.hpp"
#include "tslt/config.hpp"
#include "tslt/plot_data.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
};

int run_experiment(const std::string& path, const Overrides& ov, bool theory_only) {
  tslt::ExperimentConfig cfg;
  try {
    cfg = tslt::load_config(path);
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.jobs) cfg.jobs = *ov.jobs;
    if (ov.out) cfg.output_dir = *ov.out;
    cfg.validate();
  } catch (const tslt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  const auto t0 = std::chrono::steady_clock::now();
  tslt::CampaignReport rep;
  try {
    rep = tslt::run_campaign(cfg, theory_only);
  } catch (const tslt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    // Calibration targets outside the reachable range.
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  tslt::write_outputs(rep, cfg, cfg.output_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "wrote " << cfg.output_dir << " in " << secs << " s\n";
  if (!rep.violations.empty()) {
    for (const auto& v : rep.violations) std::cerr << "violation: " << v << "\n";
    return kExitViolation;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Device-edge speculative decoding simulator with truncated sparse uplink"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides ov;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out, "Output directory");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every campaign of a config");
  run->add_option("config", config_path, "Experiment config (YAML)")->required();
  auto* check = app.add_subcommand("check", "Run the theory suite only");
  check->add_option("config", config_path, "Experiment config (YAML)")->required();
  std::string csv_dir;
  bool svg = false;
  auto* plot = app.add_subcommand("plot", "Emit per-curve plot data from campaign CSVs");
  plot->add_option("csv_dir", csv_dir, "Directory holding the CSVs")->required();
  plot->add_flag("--svg", svg, "Also write SVG line charts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) ov.seed = seed;
  if (*jobs_opt) ov.jobs = jobs;
  if (*out_opt) ov.out = out;

  try {
    if (*run) return run_experiment(config_path, ov, false);
    if (*check) return run_experiment(config_path, ov, true);
    if (*plot) {
      const auto files = tslt::emit_plot_data(csv_dir, ov.out.value_or(csv_dir + "/plots"),
                                              tslt::PlotOptions{svg});
      for (const auto& f : files) std::cout << f << "\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
