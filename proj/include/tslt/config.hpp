#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tslt/perf_model.hpp"
#include "tslt/theory_checks.hpp"
#include "tslt/token_tree.hpp"

namespace tslt {

/// Invalid configuration. `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ModelConfig {
  /// Vocabulary the sampled sessions run at.
  std::size_t vocab_size = 2000;
  int context_order = 1;
  std::uint64_t seed = 7;
  /// γ; calibrated against (top_fraction, top_mass) when absent.
  std::optional<double> concentration;
  double top_fraction = 0.01;
  double top_mass = 0.85;
  double noise_concentration = 0.0;
  /// λ; calibrated against target_alpha when absent.
  std::optional<double> divergence;
  double target_alpha = 0.8;
  std::size_t calibration_contexts = 500;
  double calibration_tolerance = 0.005;
};

struct ExperimentConfig {
  std::string name = "experiment";
  /// Master seed. Mandatory, either in the file or from the command line.
  std::optional<std::uint64_t> seed;
  std::vector<DsdMode> modes{DsdMode::kSingle, DsdMode::kMulti};
  std::size_t draft_len = 4;
  ExpansionConfig expansion = ExpansionConfig::parse("2,2,2");
  /// Top-K grid in units of the payload vocabulary; mapped proportionally
  /// onto the sampling vocabulary. The dense point is always included.
  std::vector<std::size_t> top_k;
  std::vector<double> top_rho;
  ModelConfig model;

  std::size_t payload_vocab = 32000;
  int b_prob = 16;
  std::optional<int> b_idx;
  std::vector<PayloadConvention> conventions{PayloadConvention::kIndexed,
                                             PayloadConvention::kValuesOnly};
  std::vector<double> r_up_bps;
  bool count_draft_token_ids = false;
  TimingModel timing;

  /// Sessions per (mode, truncation) point and tokens per session.
  std::size_t trials = 40;
  std::size_t stop_len = 200;
  std::size_t mass_contexts = 500;

  TheoryCampaignConfig theory;
  bool theory_report_all = false;

  std::string output_dir = "results";
  std::size_t jobs = 1;

  /// Throws ConfigError on the first invalid field.
  void validate() const;
  LinkModel link(double r_up_bps, PayloadConvention convention) const;
};

/// Parses the YAML experiment schema documented in configs/README.md.
/// Unknown keys are errors.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace tslt
