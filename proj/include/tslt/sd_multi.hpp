#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tslt/perf_model.hpp"
#include "tslt/prob.hpp"
#include "tslt/sd_single.hpp"
#include "tslt/synth_models.hpp"
#include "tslt/token_tree.hpp"

namespace tslt {

/// k i.i.d. draws from q, with replacement, in draw order.
std::vector<TokenId> mc_sample(const Categorical& q, std::size_t k, Rng& rng);

struct McVeriResult {
  TokenId emitted = 0;
  bool accepted = false;
  /// 1-based index of the accepted candidate.
  std::optional<std::size_t> accept_index;
  /// Residual updates performed (one per rejected candidate).
  std::size_t residual_chain_len = 0;
};

/// Sequential multi-candidate verification: accept x^(i) with probability
/// min{1, p^(i)(x^(i)) / q(x^(i))}; on reject move to p^(i+1) = norm(max(0,
/// p^(i) − q)); if every candidate fails, emit a draw from p^(k+1).
McVeriResult mc_veri(std::span<const TokenId> candidates, const Categorical& p,
                     const Categorical& q, Rng& rng);

struct McExactOutput {
  Categorical law;
  /// β^(j) = Σ min(q, p^(j)) for j = 1..k.
  std::vector<double> candidate_acceptance;
  /// θ = β^(1) + Σ_{i≥2} β^(i)·Π_{j<i}(1 − β^(j)).
  double total_acceptance = 0.0;
};

/// Closed-form law of the token emitted by mc_veri with k candidates.
McExactOutput mc_output_dist_exact(const Categorical& p, const Categorical& q, std::size_t k);

/// Drafts a token tree layer by layer. Node x_{l,i} gets
/// Q_{l,i} = M_q(S_{x_{l,i}}), truncated when `trunc` is set, and k_{l+1}
/// children sampled from it using the node's keyed substream.
TokenTree tok_tree_draft(std::span<const TokenId> prefix, const NextTokenModel& draft,
                         const ExpansionConfig& config,
                         const std::optional<TruncationMode>& trunc, Rng& rng);

/// Which nodes the verifier runs in phase 1. Results are identical either way
/// because each node owns a keyed substream; kWalkOnly skips target passes on
/// nodes the sequence search never visits.
enum class VerifySchedule { kAllNodes, kWalkOnly };

struct NodeVisit {
  NodeIndex node;
  bool accepted = false;
  /// θ for this node under its actual (P, Q̂, k).
  double analytic_acceptance = 0.0;
  double discarded_mass = 0.0;
};

struct VerifiedSequence {
  std::vector<TokenId> tokens;
  /// Child position chosen at each accepted hop (1-based, within layer l+1).
  std::vector<std::size_t> trace;
  /// Internal nodes visited by the sequence search, root first.
  std::vector<NodeVisit> visits;

  std::size_t length() const { return tokens.size(); }
};

VerifiedSequence tok_tree_veri(std::span<const TokenId> prefix, const NextTokenModel& target,
                               const TokenTree& tree, Rng& rng,
                               VerifySchedule schedule = VerifySchedule::kAllNodes);

struct McSessionConfig {
  ExpansionConfig expansion{std::vector<std::size_t>{2, 2, 2}};
  std::optional<TruncationMode> truncation;
  std::size_t stop_len = 64;
  LinkModel link;
  VerifySchedule schedule = VerifySchedule::kWalkOnly;
};

struct McOracleRecord {
  VerifiedSequence verified;
  double payload_bits = 0.0;
};

struct McTranscript {
  std::vector<TokenId> sequence;
  std::vector<McOracleRecord> oracles;
  SessionStats stats;
};

McTranscript run_mc_session(const ModelPair& models, std::span<const TokenId> prefix,
                            const McSessionConfig& config, Rng& rng);

}  // namespace tslt
