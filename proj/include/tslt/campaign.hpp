#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "tslt/config.hpp"
#include "tslt/theory_checks.hpp"

namespace tslt {

struct Calibration {
  double concentration = 0.0;
  double divergence = 0.0;
  /// Mean top-(top_fraction·V) mass and mean 1 − tv at the calibrated values.
  double top_mass = 0.0;
  double alpha = 0.0;
};

/// Calibrates γ and λ unless the config fixes them.
Calibration calibrate_models(const ExperimentConfig& config);
ModelPairParams model_params(const ExperimentConfig& config, const Calibration& cal);

/// K in payload-vocabulary units mapped onto the sampling vocabulary:
/// round(K·V_sample/V_payload), clamped to 1..V_sample.
std::size_t map_top_k(std::size_t k_payload, std::size_t payload_vocab, std::size_t sample_vocab);

/// One truncation setting of the campaign.
struct GridPoint {
  std::string label;  // dense, topk or toprho
  std::size_t k_payload = 0;
  std::size_t k_sampling = 0;
  double rho = 0.0;
  bool dense = false;
};

/// Top-K points ascending, the dense point, then Top-ρ points ascending.
std::vector<GridPoint> truncation_grid(const ExperimentConfig& config);

struct MassRow {
  double k_fraction = 0.0;
  std::size_t k_payload = 0;
  std::size_t k_sampling = 0;
  double mean_mass = 0.0;
};

struct AcceptanceRow {
  DsdMode mode = DsdMode::kSingle;
  GridPoint point;
  AcceptancePoint result;
  /// Payload-vocabulary entries per transmitted distribution.
  double k_payload_effective = 0.0;
  /// Expected tokens per oracle from the measured α.
  double n_oracle_formula = 0.0;
  /// The |Δα| ≤ E[σ] + 3·stderr check is guaranteed only for the
  /// single-candidate rate; multi-candidate rows are informational.
  bool bound_asserted = false;
};

struct SpeedupRow {
  std::string experiment;
  DsdMode mode = DsdMode::kSingle;
  GridPoint point;
  double k_payload_effective = 0.0;
  double r_up_bps = 0.0;
  double alpha = 0.0;
  double alpha_stderr = 0.0;
  double tokens_per_oracle = 0.0;
  std::size_t trials = 0;
  ThroughputSpeedup model;
};

struct CampaignReport {
  std::string name;
  std::uint64_t seed = 0;
  bool theory_only = false;
  Calibration calibration;
  std::vector<MassRow> mass;
  std::vector<AcceptanceRow> acceptance;
  std::vector<SpeedupRow> speedup;
  TheoryCampaignResult theory;
  /// Human-readable invariant violations; nonempty means exit code 2.
  std::vector<std::string> violations;
};

/// Runs every campaign (or only the theory suite). Deterministic in
/// (config, seed) regardless of config.jobs.
CampaignReport run_campaign(const ExperimentConfig& config, bool theory_only = false);

void write_mass_csv(std::ostream& out, const CampaignReport& report, const ExperimentConfig& config);
void write_acceptance_csv(std::ostream& out, const CampaignReport& report,
                          const ExperimentConfig& config);
void write_speedup_csv(std::ostream& out, const CampaignReport& report);
void write_theory_csv(std::ostream& out, const CampaignReport& report, bool report_all);
void write_summary(std::ostream& out, const CampaignReport& report, const ExperimentConfig& config);

/// Writes the CSVs and summary.txt into `dir` (created if missing).
void write_outputs(const CampaignReport& report, const ExperimentConfig& config,
                   const std::string& dir);

}  // namespace tslt
