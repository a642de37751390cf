#include "tslt/sd_multi.hpp"

#include <algorithm>
#include <stdexcept>

namespace tslt {

std::vector<TokenId> mc_sample(const Categorical& q, std::size_t k, Rng& rng) {
  if (k == 0) throw std::invalid_argument("need at least one candidate");
  std::vector<TokenId> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) out.push_back(sample(q, rng));
  return out;
}

McVeriResult mc_veri(std::span<const TokenId> candidates, const Categorical& p,
                     const Categorical& q, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("need at least one candidate");
  if (p.size() != q.size()) throw std::invalid_argument("distribution size mismatch");
  McVeriResult out;
  Categorical current = p;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const TokenId x = candidates[i];
    if (x >= q.size()) throw std::out_of_range("candidate outside vocabulary");
    const double r = rng.uniform();
    if (r < accept_probability(current[x], q[x])) {
      out.emitted = x;
      out.accepted = true;
      out.accept_index = i + 1;
      return out;
    }
    // Degenerate residuals keep `current` unchanged.
    current = residual(current, q).dist;
    ++out.residual_chain_len;
  }
  out.emitted = sample(current, rng);
  return out;
}

McExactOutput mc_output_dist_exact(const Categorical& p, const Categorical& q, std::size_t k) {
  if (k == 0) throw std::invalid_argument("need at least one candidate");
  if (p.size() != q.size()) throw std::invalid_argument("distribution size mismatch");
  const std::size_t V = p.size();
  std::vector<double> law(V, 0.0);
  McExactOutput out{p, {}, 0.0};
  Categorical current = p;
  double reach = 1.0;  // Π_{s<j} (1 − β^(s))
  for (std::size_t j = 1; j <= k; ++j) {
    double beta = 0.0;
    for (std::size_t x = 0; x < V; ++x) {
      const double m = std::min(q[x], current[x]);
      law[x] += reach * m;
      beta += m;
    }
    out.candidate_acceptance.push_back(beta);
    out.total_acceptance += reach * beta;
    reach *= 1.0 - beta;
    current = residual(current, q).dist;
  }
  for (std::size_t x = 0; x < V; ++x) law[x] += reach * current[x];
  out.law = Categorical(std::move(law));
  return out;
}

TokenTree tok_tree_draft(std::span<const TokenId> prefix, const NextTokenModel& draft,
                         const ExpansionConfig& config,
                         const std::optional<TruncationMode>& trunc, Rng& rng) {
  const std::uint64_t oracle_seed = rng.next();
  TokenTree tree(config, std::vector<TokenId>(prefix.begin(), prefix.end()));
  for (std::size_t l = 0; l < config.depth(); ++l) {
    const std::size_t k = config.branching(l + 1);
    // Nodes within a layer are independent; each uses its own substream.
    for (std::size_t i = 1; i <= config.width(l); ++i) {
      const NodeIndex node{l, i};
      auto q = draft(tree.path_of(node));
      auto stream = node_stream(oracle_seed, node);
      if (trunc) {
        auto t = truncate(q, *trunc);
        auto kids = mc_sample(t.q_hat, k, stream);
        tree.set_children(node, UplinkDist(SparseLogits::from_truncation(t)), kids,
                          t.spec.discarded_mass);
      } else {
        auto kids = mc_sample(q, k, stream);
        tree.set_children(node, UplinkDist(std::move(q)), kids);
      }
    }
  }
  return tree;
}

namespace {

struct NodeResult {
  McVeriResult veri;
  double analytic_acceptance = 0.0;
};

NodeResult verify_node(const TokenTree& tree, const NextTokenModel& target, NodeIndex node,
                       std::uint64_t oracle_seed) {
  const auto p = target(tree.path_of(node));
  const auto q = tree.dist(node).reconstruct();
  const auto kids = tree.children(node);
  auto stream = node_stream(oracle_seed, node);
  NodeResult r;
  r.veri = mc_veri(kids, p, q, stream);
  r.analytic_acceptance = mc_output_dist_exact(p, q, kids.size()).total_acceptance;
  return r;
}

TokenId leaf_continuation(const TokenTree& tree, const NextTokenModel& target, NodeIndex leaf,
                          std::uint64_t oracle_seed) {
  auto stream = node_stream(oracle_seed, leaf);
  return sample(target(tree.path_of(leaf)), stream);
}

}  // namespace

VerifiedSequence tok_tree_veri(std::span<const TokenId> prefix, const NextTokenModel& target,
                               const TokenTree& tree, Rng& rng, VerifySchedule schedule) {
  if (!tree.complete()) throw std::invalid_argument("token tree is not fully drafted");
  if (!std::equal(prefix.begin(), prefix.end(), tree.prefix().begin(), tree.prefix().end())) {
    throw std::invalid_argument("tree was drafted from a different prefix");
  }
  const auto& cfg = tree.config();
  const std::size_t L = cfg.depth();
  const std::uint64_t oracle_seed = rng.next();

  // Phase 1: per-node verification, layer-major slots.
  std::vector<std::vector<std::optional<NodeResult>>> internal(L);
  std::vector<std::optional<TokenId>> leaves(cfg.width(L));
  for (std::size_t l = 0; l < L; ++l) internal[l].resize(cfg.width(l));
  if (schedule == VerifySchedule::kAllNodes) {
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t i = 1; i <= cfg.width(l); ++i) {
        internal[l][i - 1] = verify_node(tree, target, NodeIndex{l, i}, oracle_seed);
      }
    }
    for (std::size_t i = 1; i <= cfg.width(L); ++i) {
      leaves[i - 1] = leaf_continuation(tree, target, NodeIndex{L, i}, oracle_seed);
    }
  }

  // Phase 2: walk from the root along accepted children.
  VerifiedSequence out;
  std::size_t j = 1;
  for (std::size_t l = 0; l <= L; ++l) {
    const NodeIndex node{l, j};
    if (l == L) {
      auto& leaf = leaves[j - 1];
      if (!leaf) leaf = leaf_continuation(tree, target, node, oracle_seed);
      out.tokens.push_back(*leaf);
      break;
    }
    auto& slot = internal[l][j - 1];
    if (!slot) slot = verify_node(tree, target, node, oracle_seed);
    const auto& result = *slot;
    out.tokens.push_back(result.veri.emitted);
    out.visits.push_back(NodeVisit{node, result.veri.accepted, result.analytic_acceptance,
                                   tree.discarded_mass(node)});
    if (!result.veri.accepted) break;

    // Descend to the smallest child position holding the emitted token.
    const auto kids = tree.children(node);
    const auto it = std::find(kids.begin(), kids.end(), result.veri.emitted);
    if (it == kids.end()) throw std::logic_error("accepted token is not a child of its node");
    const std::size_t pos = static_cast<std::size_t>(it - kids.begin()) + 1;
    j = children_range(cfg, node).first + pos - 1;
    out.trace.push_back(j);
  }
  return out;
}

McTranscript run_mc_session(const ModelPair& models, std::span<const TokenId> prefix,
                            const McSessionConfig& config, Rng& rng) {
  if (config.stop_len <= prefix.size()) throw std::invalid_argument("stop_len must exceed the prefix length");
  const auto draft = models.draft();
  const auto target = models.target();
  McTranscript tr;
  tr.sequence.assign(prefix.begin(), prefix.end());
  while (tr.sequence.size() < config.stop_len) {
    auto tree = tok_tree_draft(tr.sequence, draft, config.expansion, config.truncation, rng);
    const auto flat = tree.flatten_for_upload();
    std::size_t entries = 0;
    for (const auto& d : flat.dists) entries += d.entry_count();
    McOracleRecord rec;
    rec.payload_bits = payload_bits_for_entries(entries, flat.tokens.size(), config.link);
    rec.verified = tok_tree_veri(tr.sequence, target, tree, rng, config.schedule);

    auto& s = tr.stats;
    ++s.oracles;
    s.tokens_generated += rec.verified.length();
    for (const auto& v : rec.verified.visits) {
      ++s.tests;
      if (v.accepted) ++s.accepts;
      s.analytic_acceptance_sum += v.analytic_acceptance;
      s.discarded_mass_sum += v.discarded_mass;
      ++s.discarded_mass_count;
    }
    s.payload_bits += rec.payload_bits;
    s.uplink_entries += entries;
    s.uplink_dists += flat.dists.size();

    tr.sequence.insert(tr.sequence.end(), rec.verified.tokens.begin(), rec.verified.tokens.end());
    tr.oracles.push_back(std::move(rec));
  }
  return tr;
}

}  // namespace tslt
