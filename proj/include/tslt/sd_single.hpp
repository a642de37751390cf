#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tslt/perf_model.hpp"
#include "tslt/prob.hpp"
#include "tslt/synth_models.hpp"

namespace tslt {

/// Acceptance test used by the verifier. kInvertedRatio uses min{1, q/p} and
/// exists only to show that it breaks losslessness.
enum class AcceptRule { kStandard, kInvertedRatio };

/// Probability of accepting a token drafted with probability q whose target
/// probability is p.
double accept_probability(double p, double q, AcceptRule rule = AcceptRule::kStandard);

/// Tokens 𝒳 = [x_1..x_L] and their uplink distributions 𝒬 = [Q_1..Q_L].
struct DraftBatch {
  std::vector<TokenId> tokens;
  std::vector<UplinkDist> dists;
  /// Discarded mass σ_i of each drafted step (0 without truncation).
  std::vector<double> discarded_mass;

  std::size_t draft_len() const { return tokens.size(); }
  std::size_t uplink_entries() const;
};

struct OracleOutcome {
  /// Accepted draft tokens followed by the resampled or bonus token.
  std::vector<TokenId> tokens;
  std::size_t n_accepted = 0;
  /// Flags for the positions actually tested (stops at the first reject).
  std::vector<bool> accept_flags;
  /// 1-based position of the rejected draft, if any.
  std::optional<std::size_t> reject_position;
  /// 1 − tv(P_j, Q̂_j) for each tested position.
  std::vector<double> analytic_acceptance;
  /// Mean σ over the drafted steps.
  double mean_discarded_mass = 0.0;
  double payload_bits = 0.0;

  std::size_t n_generated() const { return tokens.size(); }
};

/// Draws L tokens autoregressively from the draft model, truncating each
/// step's distribution first when `trunc` is set. Draws for step i come from
/// a substream keyed (i−1, 1) of one word taken from `rng`, matching the
/// keying of a ⟨1,…,1⟩ token tree.
DraftBatch tok_seq_draft(std::span<const TokenId> prefix, const NextTokenModel& draft,
                         std::size_t draft_len, const std::optional<TruncationMode>& trunc,
                         Rng& rng);

/// Verifies a batch against the target: accept x_j iff r < min{1, p_j/q_j},
/// resample from norm(max(0, P_j − Q_j)) on the first reject, or draw a bonus
/// token from P_{L+1} when all drafts pass. Q_j is what the edge reconstructs
/// from the uplink.
OracleOutcome tok_seq_veri(std::span<const TokenId> prefix, const NextTokenModel& target,
                           const DraftBatch& batch, Rng& rng,
                           AcceptRule rule = AcceptRule::kStandard);

struct ScSessionConfig {
  std::size_t draft_len = 4;
  std::optional<TruncationMode> truncation;
  /// Stop once the sequence holds this many tokens.
  std::size_t stop_len = 64;
  LinkModel link;
  AcceptRule rule = AcceptRule::kStandard;
};

struct SessionStats {
  std::size_t oracles = 0;
  std::size_t tokens_generated = 0;
  /// Acceptance tests performed and passed (positions for SC, tree nodes
  /// visited for MC).
  std::size_t tests = 0;
  std::size_t accepts = 0;
  double analytic_acceptance_sum = 0.0;
  double discarded_mass_sum = 0.0;
  std::size_t discarded_mass_count = 0;
  double payload_bits = 0.0;
  /// Transmitted distribution entries and distributions.
  std::size_t uplink_entries = 0;
  std::size_t uplink_dists = 0;
};

struct ScTranscript {
  std::vector<TokenId> sequence;
  std::vector<OracleOutcome> oracles;
  SessionStats stats;
};

/// Draft → upload → verify → prefix update until `stop_len` tokens exist.
ScTranscript run_sc_session(const ModelPair& models, std::span<const TokenId> prefix,
                            const ScSessionConfig& config, Rng& rng);

struct ExactOutput {
  Categorical law;
  /// β = Σ min(p, q).
  double acceptance = 0.0;
};

/// Closed-form law of one verified token: min(P, Q) + (1 − β)·norm(max(0, P − Q)).
ExactOutput sc_output_dist_exact(const Categorical& p, const Categorical& q,
                                 AcceptRule rule = AcceptRule::kStandard);

}  // namespace tslt
