#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "tslt/token_tree.hpp"

namespace tslt {

/// How many bits one transmitted distribution entry costs.
///  kIndexed:   b_prob + b_idx (value plus explicit token index)
///  kValuesOnly: b_prob only (0.5 Mbit per dense FP16 distribution at V = 32000)
enum class PayloadConvention { kIndexed, kValuesOnly };

std::string_view to_string(PayloadConvention c);
PayloadConvention parse_payload_convention(std::string_view text);

/// ⌈log2 V⌉, at least 1.
int index_bits_for(std::size_t vocab_size);

struct LinkModel {
  double uplink_bps = 1e6;
  int b_prob = 16;
  int b_idx = 15;
  std::size_t vocab_size = 32000;
  PayloadConvention convention = PayloadConvention::kIndexed;
  /// Adds the drafted token ids (b_idx each) to the uplink payload.
  bool count_draft_token_ids = false;

  /// b_idx defaults to ⌈log2 V⌉.
  static LinkModel make(double uplink_bps, std::size_t vocab_size, int b_prob = 16,
                        PayloadConvention convention = PayloadConvention::kIndexed);

  int bits_per_entry() const;
  /// Throws std::invalid_argument on a non-positive rate or unsupported widths.
  void validate() const;
};

struct TimingModel {
  double t_slm = 0.00125;
  double t_llm = 0.025;
  void validate() const;
};

/// Draft shape of one oracle call: a chain of L tokens or a token tree.
using DraftShape = std::variant<std::size_t, ExpansionConfig>;

std::size_t uploaded_dist_count(const DraftShape& shape);
std::size_t uploaded_token_count(const DraftShape& shape);

/// Uplink bits for one oracle: count · effective_vocab · bits_per_entry, plus
/// drafted token ids when the link counts them. `effective_vocab` is V for
/// dense transmission and K under Top-K truncation.
double payload_bits(const DraftShape& shape, std::size_t effective_vocab, const LinkModel& link);

/// Uplink bits for an explicit list of per-distribution entry counts.
double payload_bits_for_entries(std::size_t total_entries, std::size_t drafted_tokens,
                                const LinkModel& link);

/// payload / R_up.
double t_comm(const LinkModel& link, double payload_bits);

/// (1 − α^{L+1}) / (1 − α); L + 1 in the α → 1 limit.
double n_oracle_expected(double alpha, std::size_t draft_len);

struct ThroughputSpeedup {
  double n_oracle = 0.0;       // expected tokens per oracle call
  double payload_bits = 0.0;   // per oracle call
  double t_comm = 0.0;         // seconds per oracle call
  double t_oracle = 0.0;       // seconds per oracle call
  double throughput = 0.0;     // tokens per second
  double speedup = 0.0;        // S_inf
  /// throughput · T_LLM. Equal to `speedup` for the single-candidate model.
  double speedup_from_throughput = 0.0;
};

/// Single-candidate: Θ = N_oracle / (L·T_SLM + T_comm + T_LLM), S = Θ·T_LLM.
ThroughputSpeedup sc_throughput_and_speedup(const LinkModel& link, const TimingModel& timing,
                                            double alpha, std::size_t draft_len,
                                            std::size_t effective_vocab);

/// Multi-candidate: T_oracle = L·T_SLM + |𝒬|·T_V + T_LLM with the closed-form
/// speedup S = 1 / ((L·T_SLM + |𝒬|·T_V) / ((L·α + 1)·T_LLM) + 1).
/// `throughput` uses N = L·α + 1 over T_oracle.
ThroughputSpeedup mc_throughput_and_speedup(const LinkModel& link, const TimingModel& timing,
                                            double alpha, const ExpansionConfig& config,
                                            std::size_t effective_vocab);

/// Measured compute plus n oracles of modeled communication.
double t_dsd_total(double t_comp, double n_oracles, double t_comm_per_oracle);

}  // namespace tslt
