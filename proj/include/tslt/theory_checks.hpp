#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tslt/prob.hpp"
#include "tslt/sd_multi.hpp"
#include "tslt/synth_models.hpp"
#include "tslt/token_tree.hpp"

namespace tslt {

/// Slack allowed on every bound comparison.
inline constexpr double kBoundTolerance = 1e-9;
/// Residual chains with any normalizer below this floor are reported but not
/// asserted against the recursive bounds.
inline constexpr double kResidualFloor = 0.05;

/// One evaluated inequality lhs ≤ rhs. Equalities are reported as
/// lhs = |a − b| against rhs = 0.
struct BoundReport {
  std::string check;
  std::uint64_t seed = 0;
  std::size_t vocab = 0;
  std::string truncation;
  std::size_t candidates = 0;
  std::size_t level = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  /// satisfied ⇔ lhs ≤ rhs + tolerance.
  double tolerance = kBoundTolerance;
  bool satisfied = true;
  /// False for reports that are informational only (below the residual floor
  /// or past a degenerate step).
  bool asserted = true;
  /// The bound exceeds 1 and therefore says nothing.
  bool vacuous = false;
  std::string note;

  double slack() const { return rhs - lhs; }
  bool violated() const { return asserted && !satisfied; }
};

/// tv(Q̂, Q) = σ.
BoundReport check_sigma_identity(const Categorical& q, const TruncationMode& mode);
/// |β̂ − β| ≤ σ with β = 1 − tv(Q, P), β̂ = 1 − tv(Q̂, P).
BoundReport check_acceptance_drift(const Categorical& p, const Categorical& q, const TruncationMode& mode);
/// |tv(Q̂, P) − tv(Q, P)| ≤ tv(Q̂, Q).
BoundReport check_tv_triangle(const Categorical& p, const Categorical& q,
                                 const Categorical& q_hat);
/// |tv(Q̂, P̂) − tv(Q, P)| ≤ tv(Q̂, Q) + tv(P̂, P).
BoundReport check_tv_double_triangle(const Categorical& p, const Categorical& q, const Categorical& p_hat,
                         const Categorical& q_hat);

/// Residual chains P^(1) = P, P^(i+1) = norm(max(0, P^(i) − Q)) built with Q
/// and with Q̂, with normalizers Z^(i+1) = Σ max(0, p^(i) − q) = tv(P^(i), Q).
struct ResidualChains {
  std::vector<Categorical> exact;
  std::vector<Categorical> truncated;
  /// normalizer[i] is Z^(i+1) for the exact chain (index 0 unused, = 1).
  std::vector<double> normalizer;
  std::vector<double> truncated_normalizer;
  /// Levels actually built before a degenerate step.
  std::size_t levels = 0;
  bool degenerate = false;
};

ResidualChains build_residual_chains(const Categorical& p, const Categorical& q,
                                     const Categorical& q_hat, std::size_t depth);

/// Per-level reports for depth j ≥ 2:
///  "residual_recursion"   tv(P^(i), P̂^(i)) ≤ (2/Z^(i))·[tv(P^(i−1), P̂^(i−1)) + tv(Q, Q̂)]
///             (level 2 is tagged "residual_first_step")
///  "chain_acceptance_drift" |β̂^(i) − β^(i)| ≤ [Σ_{k=1}^{i−1} Π_{s=k+1}^{i} 2/Z^(s) + 1]·σ
///  "z_identity" Z^(i) = tv(P^(i−1), Q)
/// Levels whose Z falls below kResidualFloor are reported unasserted.
std::vector<BoundReport> check_residual_chain(const Categorical& p, const Categorical& q,
                                            const TruncationMode& mode, std::size_t depth);

/// max_x |law(x) − P(x)| for the single-candidate verified-token law with
/// draft Q̂, against rhs = 0 with tolerance 1e-12.
BoundReport check_lossless_sc(const Categorical& p, const Categorical& q_hat);
/// Same for the k-candidate cascade.
BoundReport check_lossless_mc(const Categorical& p, const Categorical& q_hat, std::size_t k);

/// Random categorical for fuzzing: symmetric random weights, with each entry
/// zeroed with probability `sparsity` (at least one entry survives).
Categorical random_categorical(std::size_t vocab, Rng& rng, double sparsity = 0.2);

struct MassPoint {
  std::size_t k = 0;
  double mean_mass = 0.0;
};

/// Mean top-K mass of the target over `contexts` for each K in the order
/// given. Throws std::logic_error if the curve decreases along increasing K.
std::vector<MassPoint> topk_mass_curve(const ModelPair& model,
                                       const std::vector<std::vector<TokenId>>& contexts,
                                       const std::vector<std::size_t>& k_grid);

enum class DsdMode { kSingle, kMulti };
std::string_view to_string(DsdMode mode);
DsdMode parse_dsd_mode(std::string_view text);

struct AcceptanceCampaignConfig {
  ModelPairParams model;
  std::size_t draft_len = 4;
  ExpansionConfig expansion = ExpansionConfig::parse("2,2,2");
  std::vector<DsdMode> modes{DsdMode::kSingle, DsdMode::kMulti};
  /// Top-K sizes; K ≥ V runs untruncated (dense upload). The dense point is
  /// always run.
  std::vector<std::size_t> k_grid;
  /// Optional Top-ρ points.
  std::vector<double> rho_grid;
  std::size_t sessions = 50;
  /// Tokens generated per session.
  std::size_t session_tokens = 200;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
};

struct AcceptancePoint {
  DsdMode mode = DsdMode::kSingle;
  /// Empty for the dense point.
  std::optional<TruncationMode> truncation;
  /// K for Top-K points, V for the dense point, 0 for Top-ρ points.
  std::size_t k = 0;
  double rho = 0.0;
  bool dense = false;
  /// Mean transmitted entries per uplinked distribution.
  double mean_kept = 0.0;
  std::size_t sessions = 0;
  std::size_t oracles = 0;
  std::size_t tokens = 0;
  std::size_t tests = 0;
  std::size_t accepts = 0;
  /// accepts / tests pooled over sessions, with a ratio-estimator stderr
  /// treating sessions as independent clusters.
  double alpha = 0.0;
  double alpha_stderr = 0.0;
  /// Mean of 1 − tv(P, Q̂) (SC) or the cascade acceptance (MC) over tests.
  double analytic_alpha = 0.0;
  double mean_sigma = 0.0;
  double tokens_per_oracle = 0.0;
  double tokens_per_oracle_stderr = 0.0;
  /// α(K) − α(dense) and the stderr of that difference.
  double delta = 0.0;
  double delta_stderr = 0.0;
  /// |delta| ≤ mean_sigma + 3·delta_stderr.
  bool within_bound = true;
};

/// Runs `sessions` sessions per (mode, truncation). Session s of a mode uses
/// the seed derive_seed(seed, {mode, s}) at every truncation. Points are
/// ordered by mode, then Top-K by K (dense last), then Top-ρ by ρ.
std::vector<AcceptancePoint> acceptance_campaign(const AcceptanceCampaignConfig& config);

struct TheoryCampaignConfig {
  std::uint64_t seed = 1;
  std::size_t instances = 10000;
  std::size_t min_vocab = 2;
  std::size_t max_vocab = 64;
  /// Residual-chain campaign.
  std::size_t chain_instances = 10000;
  std::size_t chain_vocab = 8;
  std::size_t chain_top_k = 4;
  std::size_t chain_depth = 4;
  double sparsity = 0.2;
  std::size_t jobs = 1;
};

struct CheckSummary {
  std::string check;
  std::size_t count = 0;
  std::size_t asserted = 0;
  std::size_t violations = 0;
  std::size_t vacuous = 0;
  /// Asserted report with the smallest slack.
  BoundReport tightest;
};

struct TheoryCampaignResult {
  std::vector<BoundReport> reports;
  std::vector<CheckSummary> summaries;
  std::size_t violations = 0;
  std::size_t chains_asserted = 0;
  std::size_t chains_below_floor = 0;
  std::size_t vacuous = 0;
};

/// Runs every check over seeded fuzz instances. Reports are merged in seed
/// order regardless of `jobs`.
TheoryCampaignResult run_theory_campaign(const TheoryCampaignConfig& config);

}  // namespace tslt
