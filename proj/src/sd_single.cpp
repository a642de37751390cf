#include "tslt/sd_single.hpp"

#include <algorithm>
#include <stdexcept>

#include "tslt/token_tree.hpp"

namespace tslt {

double accept_probability(double p, double q, AcceptRule rule) {
  if (rule == AcceptRule::kStandard) {
    if (q <= 0.0) return 1.0;
    return std::min(1.0, p / q);
  }
  if (p <= 0.0) return 1.0;
  return std::min(1.0, q / p);
}

std::size_t DraftBatch::uplink_entries() const {
  std::size_t n = 0;
  for (const auto& d : dists) n += d.entry_count();
  return n;
}

DraftBatch tok_seq_draft(std::span<const TokenId> prefix, const NextTokenModel& draft,
                         std::size_t draft_len, const std::optional<TruncationMode>& trunc,
                         Rng& rng) {
  if (draft_len == 0) throw std::invalid_argument("draft length must be >= 1");
  const std::uint64_t oracle_seed = rng.next();
  DraftBatch batch;
  std::vector<TokenId> context(prefix.begin(), prefix.end());
  for (std::size_t i = 1; i <= draft_len; ++i) {
    auto q = draft(context);
    auto stream = node_stream(oracle_seed, NodeIndex{i - 1, 1});
    TokenId x;
    if (trunc) {
      auto t = truncate(q, *trunc);
      x = sample(t.q_hat, stream);
      batch.discarded_mass.push_back(t.spec.discarded_mass);
      batch.dists.emplace_back(SparseLogits::from_truncation(t));
    } else {
      x = sample(q, stream);
      batch.discarded_mass.push_back(0.0);
      batch.dists.emplace_back(std::move(q));
    }
    batch.tokens.push_back(x);
    context.push_back(x);
  }
  return batch;
}

OracleOutcome tok_seq_veri(std::span<const TokenId> prefix, const NextTokenModel& target,
                           const DraftBatch& batch, Rng& rng, AcceptRule rule) {
  const std::size_t L = batch.draft_len();
  if (L == 0 || batch.dists.size() != L) throw std::invalid_argument("malformed draft batch");
  const std::uint64_t oracle_seed = rng.next();

  // One target pass over prefix ⊕ 𝒳 yields P_1..P_{L+1}.
  std::vector<TokenId> context(prefix.begin(), prefix.end());
  std::vector<Categorical> p_dists;
  p_dists.reserve(L + 1);
  for (std::size_t j = 0; j <= L; ++j) {
    p_dists.push_back(target(context));
    if (j < L) context.push_back(batch.tokens[j]);
  }

  OracleOutcome out;
  double sigma_sum = 0.0;
  for (double s : batch.discarded_mass) sigma_sum += s;
  out.mean_discarded_mass = batch.discarded_mass.empty() ? 0.0 : sigma_sum / static_cast<double>(L);

  for (std::size_t j = 1; j <= L; ++j) {
    const auto& p = p_dists[j - 1];
    const auto q = batch.dists[j - 1].reconstruct();
    const TokenId x = batch.tokens[j - 1];
    auto stream = node_stream(oracle_seed, NodeIndex{j - 1, 1});
    out.analytic_acceptance.push_back(overlap_mass(p, q));
    const double r = stream.uniform();
    if (r < accept_probability(p[x], q[x], rule)) {
      out.accept_flags.push_back(true);
      out.tokens.push_back(x);
      ++out.n_accepted;
      continue;
    }
    out.accept_flags.push_back(false);
    out.reject_position = j;
    // A degenerate residual comes back as p itself.
    out.tokens.push_back(sample(residual(p, q).dist, stream));
    return out;
  }
  auto bonus_stream = node_stream(oracle_seed, NodeIndex{L, 1});
  out.tokens.push_back(sample(p_dists[L], bonus_stream));
  return out;
}

ScTranscript run_sc_session(const ModelPair& models, std::span<const TokenId> prefix,
                            const ScSessionConfig& config, Rng& rng) {
  if (config.stop_len <= prefix.size()) throw std::invalid_argument("stop_len must exceed the prefix length");
  const auto draft = models.draft();
  const auto target = models.target();
  ScTranscript tr;
  tr.sequence.assign(prefix.begin(), prefix.end());
  while (tr.sequence.size() < config.stop_len) {
    auto batch = tok_seq_draft(tr.sequence, draft, config.draft_len, config.truncation, rng);
    auto outcome = tok_seq_veri(tr.sequence, target, batch, rng, config.rule);
    outcome.payload_bits =
        payload_bits_for_entries(batch.uplink_entries(), batch.draft_len(), config.link);

    auto& s = tr.stats;
    ++s.oracles;
    s.tokens_generated += outcome.n_generated();
    s.tests += outcome.accept_flags.size();
    s.accepts += outcome.n_accepted;
    for (double a : outcome.analytic_acceptance) s.analytic_acceptance_sum += a;
    // σ is averaged over the positions that were actually tested.
    for (std::size_t j = 0; j < outcome.accept_flags.size(); ++j) {
      s.discarded_mass_sum += batch.discarded_mass[j];
    }
    s.discarded_mass_count += outcome.accept_flags.size();
    s.payload_bits += outcome.payload_bits;
    s.uplink_entries += batch.uplink_entries();
    s.uplink_dists += batch.dists.size();

    tr.sequence.insert(tr.sequence.end(), outcome.tokens.begin(), outcome.tokens.end());
    tr.oracles.push_back(std::move(outcome));
  }
  return tr;
}

ExactOutput sc_output_dist_exact(const Categorical& p, const Categorical& q, AcceptRule rule) {
  if (p.size() != q.size()) throw std::invalid_argument("distribution size mismatch");
  std::vector<double> law(p.size());
  double accepted = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    law[x] = rule == AcceptRule::kStandard ? std::min(p[x], q[x])
                                           : q[x] * accept_probability(p[x], q[x], rule);
    accepted += law[x];
  }
  const double rejected = 1.0 - accepted;
  const auto res = residual(p, q);
  for (std::size_t x = 0; x < p.size(); ++x) law[x] += rejected * res.dist[x];
  return ExactOutput{Categorical(std::move(law)), accepted};
}

}  // namespace tslt
