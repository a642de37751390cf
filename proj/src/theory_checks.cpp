#include "tslt/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tslt/parallel.hpp"
#include "tslt/sd_single.hpp"

namespace tslt {
namespace {

BoundReport make_report(std::string check, double lhs, double rhs,
                        double tolerance = kBoundTolerance) {
  BoundReport r;
  r.check = std::move(check);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tolerance;
  r.satisfied = lhs <= rhs + tolerance;
  return r;
}

double max_abs_diff(const Categorical& a, const Categorical& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

constexpr double kLosslessTolerance = 1e-12;
constexpr double kChainDegenerate = 1e-9;

}  // namespace

BoundReport check_sigma_identity(const Categorical& q, const TruncationMode& mode) {
  const auto t = truncate(q, mode);
  auto r = make_report("sigma_identity", std::abs(tv_distance(t.q_hat, q) - t.spec.discarded_mass),
                       0.0);
  r.vocab = q.size();
  r.truncation = describe(mode);
  return r;
}

BoundReport check_acceptance_drift(const Categorical& p, const Categorical& q, const TruncationMode& mode) {
  const auto t = truncate(q, mode);
  const double beta = 1.0 - tv_distance(q, p);
  const double beta_hat = 1.0 - tv_distance(t.q_hat, p);
  auto r = make_report("acceptance_drift", std::abs(beta_hat - beta), t.spec.discarded_mass);
  r.vocab = q.size();
  r.truncation = describe(mode);
  return r;
}

BoundReport check_tv_triangle(const Categorical& p, const Categorical& q,
                                 const Categorical& q_hat) {
  auto r = make_report("tv_triangle", std::abs(tv_distance(q_hat, p) - tv_distance(q, p)),
                       tv_distance(q_hat, q));
  r.vocab = p.size();
  return r;
}

BoundReport check_tv_double_triangle(const Categorical& p, const Categorical& q, const Categorical& p_hat,
                         const Categorical& q_hat) {
  auto r = make_report("tv_double_triangle", std::abs(tv_distance(q_hat, p_hat) - tv_distance(q, p)),
                       tv_distance(q_hat, q) + tv_distance(p_hat, p));
  r.vocab = p.size();
  return r;
}

BoundReport check_lossless_sc(const Categorical& p, const Categorical& q_hat) {
  auto r = make_report("lossless_sc", max_abs_diff(sc_output_dist_exact(p, q_hat).law, p), 0.0,
                       kLosslessTolerance);
  r.vocab = p.size();
  r.candidates = 1;
  return r;
}

BoundReport check_lossless_mc(const Categorical& p, const Categorical& q_hat, std::size_t k) {
  auto r = make_report("lossless_mc", max_abs_diff(mc_output_dist_exact(p, q_hat, k).law, p),
                       0.0, kLosslessTolerance);
  r.vocab = p.size();
  r.candidates = k;
  return r;
}

ResidualChains build_residual_chains(const Categorical& p, const Categorical& q,
                                     const Categorical& q_hat, std::size_t depth) {
  if (depth < 1) throw std::invalid_argument("chain depth must be >= 1");
  ResidualChains c;
  c.exact.push_back(p);
  c.truncated.push_back(p);
  c.normalizer.push_back(1.0);
  c.truncated_normalizer.push_back(1.0);
  c.levels = 1;
  for (std::size_t i = 1; i < depth; ++i) {
    auto e = residual(c.exact.back(), q);
    auto t = residual(c.truncated.back(), q_hat);
    if (e.normalizer < kChainDegenerate || t.normalizer < kChainDegenerate) {
      c.degenerate = true;
      break;
    }
    c.exact.push_back(std::move(e.dist));
    c.truncated.push_back(std::move(t.dist));
    c.normalizer.push_back(e.normalizer);
    c.truncated_normalizer.push_back(t.normalizer);
    ++c.levels;
  }
  return c;
}

std::vector<BoundReport> check_residual_chain(const Categorical& p, const Categorical& q,
                                            const TruncationMode& mode, std::size_t depth) {
  const auto t = truncate(q, mode);
  const double sigma = t.spec.discarded_mass;
  const auto chains = build_residual_chains(p, q, t.q_hat, depth);

  double min_z = 1.0;
  for (std::size_t i = 1; i < chains.levels; ++i) min_z = std::min(min_z, chains.normalizer[i]);
  const bool above_floor = min_z >= kResidualFloor && !chains.degenerate;

  std::vector<BoundReport> out;
  auto push = [&](BoundReport r, std::size_t level, bool bound) {
    r.vocab = p.size();
    r.truncation = describe(mode);
    r.level = level;
    if (bound) {
      r.vacuous = r.rhs > 1.0;
      if (!above_floor) {
        r.asserted = false;
        r.note = "below residual floor";
      }
    }
    out.push_back(std::move(r));
  };

  // coeff[i] = Σ_{k=1}^{i−1} Π_{s=k+1}^{i} 2/Z^(s), built as coeff[i] = (2/Z^(i))·(coeff[i−1] + 1).
  double coeff = 0.0;
  double prev_tv = 0.0;
  for (std::size_t i = 0; i < chains.levels; ++i) {
    const std::size_t level = i + 1;
    const double tv_pp = tv_distance(chains.exact[i], chains.truncated[i]);
    if (i > 0) {
      const double z = chains.normalizer[i];
      push(make_report("z_identity", std::abs(z - tv_distance(chains.exact[i - 1], q)), 0.0),
           level, false);
      push(make_report(level == 2 ? "residual_first_step" : "residual_recursion", tv_pp, (2.0 / z) * (prev_tv + sigma)),
           level, true);
      coeff = (2.0 / z) * (coeff + 1.0);
    }
    const double beta = 1.0 - tv_distance(chains.exact[i], q);
    const double beta_hat = 1.0 - tv_distance(chains.truncated[i], t.q_hat);
    push(make_report("chain_acceptance_drift", std::abs(beta_hat - beta), (coeff + 1.0) * sigma), level, true);
    prev_tv = tv_pp;
  }
  if (chains.degenerate) {
    auto r = make_report("residual_recursion", 0.0, 0.0);
    r.asserted = false;
    r.note = "degenerate residual at level " + std::to_string(chains.levels + 1);
    push(std::move(r), chains.levels + 1, false);
  }
  return out;
}

Categorical random_categorical(std::size_t vocab, Rng& rng, double sparsity) {
  if (vocab == 0) throw std::invalid_argument("vocabulary must be nonempty");
  std::vector<double> w(vocab);
  for (auto& x : w) {
    // Exponential weights give a flat Dirichlet.
    x = -std::log(1.0 - rng.uniform());
    if (rng.uniform() < sparsity) x = 0.0;
  }
  if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) {
    w[rng.next() % vocab] = 1.0;
  }
  return Categorical::from_weights(std::move(w));
}

std::vector<MassPoint> topk_mass_curve(const ModelPair& model,
                                       const std::vector<std::vector<TokenId>>& contexts,
                                       const std::vector<std::size_t>& k_grid) {
  if (contexts.empty()) throw std::invalid_argument("need at least one context");
  const std::size_t V = model.vocab_size();
  std::vector<MassPoint> out;
  for (auto k : k_grid) {
    if (k == 0) throw std::invalid_argument("K must be >= 1");
    out.push_back({k, 0.0});
  }
  for (const auto& ctx : contexts) {
    const auto p = model.target_dist(ctx);
    const auto order = descending_order(p.probs());
    std::vector<double> prefix(V + 1, 0.0);
    for (std::size_t i = 0; i < V; ++i) prefix[i + 1] = prefix[i] + p[order[i]];
    for (auto& pt : out) pt.mean_mass += prefix[std::min(pt.k, V)];
  }
  for (auto& pt : out) pt.mean_mass /= static_cast<double>(contexts.size());

  auto sorted = out;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MassPoint& a, const MassPoint& b) { return a.k < b.k; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].mean_mass < sorted[i - 1].mean_mass - kBoundTolerance) {
      throw std::logic_error("top-K mass curve decreases at K=" + std::to_string(sorted[i].k));
    }
  }
  return out;
}

std::string_view to_string(DsdMode mode) { return mode == DsdMode::kSingle ? "sc" : "mc"; }

DsdMode parse_dsd_mode(std::string_view text) {
  if (text == "sc" || text == "SC") return DsdMode::kSingle;
  if (text == "mc" || text == "MC") return DsdMode::kMulti;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "' (expected sc or mc)");
}

namespace {

struct SessionTally {
  std::size_t oracles = 0;
  std::size_t tokens = 0;
  std::size_t tests = 0;
  std::size_t accepts = 0;
  double analytic_sum = 0.0;
  double sigma_sum = 0.0;
  std::size_t sigma_count = 0;
  std::size_t uplink_entries = 0;
  std::size_t uplink_dists = 0;
};

SessionTally run_one_session(const ModelPair& models, DsdMode mode,
                             const std::optional<TruncationMode>& trunc,
                             const AcceptanceCampaignConfig& cfg, std::uint64_t seed) {
  const std::size_t V = models.vocab_size();
  Rng rng(seed);
  std::vector<TokenId> prefix;
  for (int j = 0; j < models.params().context_order; ++j) {
    prefix.push_back(static_cast<TokenId>(rng.next() % V));
  }
  const auto link = LinkModel::make(1e6, V);
  const std::size_t stop = prefix.size() + cfg.session_tokens;

  SessionStats s;
  if (mode == DsdMode::kSingle) {
    ScSessionConfig sc;
    sc.draft_len = cfg.draft_len;
    sc.truncation = trunc;
    sc.stop_len = stop;
    sc.link = link;
    s = run_sc_session(models, prefix, sc, rng).stats;
  } else {
    McSessionConfig mc;
    mc.expansion = cfg.expansion;
    mc.truncation = trunc;
    mc.stop_len = stop;
    mc.link = link;
    s = run_mc_session(models, prefix, mc, rng).stats;
  }
  return SessionTally{s.oracles,
                      s.tokens_generated,
                      s.tests,
                      s.accepts,
                      s.analytic_acceptance_sum,
                      s.discarded_mass_sum,
                      s.discarded_mass_count,
                      s.uplink_entries,
                      s.uplink_dists};
}

/// Pooled ratio Σa/Σb and its cluster (ratio-estimator) standard error.
std::pair<double, double> ratio_estimate(const std::vector<double>& a,
                                         const std::vector<double>& b) {
  const std::size_t n = a.size();
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < n; ++i) sa += a[i], sb += b[i];
  if (sb <= 0.0) return {0.0, 0.0};
  const double r = sa / sb;
  if (n < 2) return {r, 0.0};
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = a[i] - r * b[i];
    ss += e * e;
  }
  const double mean_b = sb / static_cast<double>(n);
  return {r, std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1))) / mean_b};
}

}  // namespace

std::vector<AcceptancePoint> acceptance_campaign(const AcceptanceCampaignConfig& config) {
  if (config.sessions == 0) throw std::invalid_argument("sessions must be >= 1");
  if (config.session_tokens == 0) throw std::invalid_argument("session_tokens must be >= 1");
  if (config.modes.empty()) throw std::invalid_argument("at least one mode is required");
  const ModelPair models(config.model);
  const std::size_t V = models.vocab_size();

  std::vector<std::size_t> ks;
  for (auto k : config.k_grid) {
    if (k == 0) throw std::invalid_argument("K must be >= 1");
    ks.push_back(std::min(k, V));
  }
  ks.push_back(V);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  auto rhos = config.rho_grid;
  for (double r : rhos) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
  }
  std::sort(rhos.begin(), rhos.end());
  rhos.erase(std::unique(rhos.begin(), rhos.end()), rhos.end());

  std::vector<std::optional<TruncationMode>> truncs;
  for (auto k : ks) {
    if (k < V) truncs.emplace_back(TopK{k});
    else truncs.emplace_back(std::nullopt);
  }
  for (double r : rhos) truncs.emplace_back(TopRho{r});
  const std::size_t dense_slot = ks.size() - 1;

  auto modes = config.modes;
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());

  const std::size_t per_point = config.sessions;
  const std::size_t n_trunc = truncs.size();
  const std::size_t n_points = modes.size() * n_trunc;
  std::vector<SessionTally> tallies(n_points * per_point);
  parallel_for(tallies.size(), config.jobs, [&](std::size_t slot) {
    const std::size_t point = slot / per_point;
    const std::size_t s = slot % per_point;
    const DsdMode mode = modes[point / n_trunc];
    const auto seed = derive_seed(config.seed, {static_cast<std::uint64_t>(mode), s});
    tallies[slot] = run_one_session(models, mode, truncs[point % n_trunc], config, seed);
  });

  std::vector<AcceptancePoint> out;
  for (std::size_t point = 0; point < n_points; ++point) {
    AcceptancePoint ap;
    ap.mode = modes[point / n_trunc];
    const std::size_t t = point % n_trunc;
    ap.truncation = truncs[t];
    if (t < ks.size()) ap.k = ks[t];
    else ap.rho = rhos[t - ks.size()];
    ap.dense = t == dense_slot;
    ap.sessions = per_point;
    std::vector<double> acc, tst, tok, orc;
    double analytic = 0.0, sigma = 0.0;
    std::size_t sigma_count = 0, entries = 0, dists = 0;
    for (std::size_t s = 0; s < per_point; ++s) {
      const auto& tl = tallies[point * per_point + s];
      ap.oracles += tl.oracles;
      ap.tokens += tl.tokens;
      ap.tests += tl.tests;
      ap.accepts += tl.accepts;
      analytic += tl.analytic_sum;
      sigma += tl.sigma_sum;
      sigma_count += tl.sigma_count;
      entries += tl.uplink_entries;
      dists += tl.uplink_dists;
      acc.push_back(static_cast<double>(tl.accepts));
      tst.push_back(static_cast<double>(tl.tests));
      tok.push_back(static_cast<double>(tl.tokens));
      orc.push_back(static_cast<double>(tl.oracles));
    }
    std::tie(ap.alpha, ap.alpha_stderr) = ratio_estimate(acc, tst);
    std::tie(ap.tokens_per_oracle, ap.tokens_per_oracle_stderr) = ratio_estimate(tok, orc);
    ap.analytic_alpha = ap.tests ? analytic / static_cast<double>(ap.tests) : 0.0;
    ap.mean_sigma = sigma_count ? sigma / static_cast<double>(sigma_count) : 0.0;
    ap.mean_kept = dists ? static_cast<double>(entries) / static_cast<double>(dists) : 0.0;
    out.push_back(ap);
  }

  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto& dense = out[m * n_trunc + dense_slot];
    for (std::size_t j = 0; j < n_trunc; ++j) {
      auto& ap = out[m * n_trunc + j];
      ap.delta = ap.alpha - dense.alpha;
      ap.delta_stderr = ap.dense ? 0.0
                                 : std::sqrt(ap.alpha_stderr * ap.alpha_stderr +
                                             dense.alpha_stderr * dense.alpha_stderr);
      ap.within_bound =
          std::abs(ap.delta) <= ap.mean_sigma + 3.0 * ap.delta_stderr + kBoundTolerance;
    }
  }
  return out;
}

namespace {

const std::vector<std::string>& check_order() {
  static const std::vector<std::string> order{
      "sigma_identity", "acceptance_drift", "tv_triangle",     "tv_double_triangle",   "lossless_sc",
      "lossless_mc",    "z_identity", "residual_first_step", "residual_recursion", "chain_acceptance_drift"};
  return order;
}

TruncationMode fuzz_mode(std::size_t V, Rng& rng) {
  if (rng.next() % 2 == 0) return TopK{1 + static_cast<std::size_t>(rng.next() % V)};
  const double rho = 0.1 * static_cast<double>(1 + rng.next() % 10);
  const bool exclusive = rng.next() % 4 == 0;
  return TopRho{rho, exclusive};
}

std::vector<BoundReport> fuzz_instance(const TheoryCampaignConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t span = cfg.max_vocab - cfg.min_vocab + 1;
  const std::size_t V = cfg.min_vocab + static_cast<std::size_t>(rng.next() % span);
  const auto p = random_categorical(V, rng, cfg.sparsity);
  const auto q = random_categorical(V, rng, cfg.sparsity);
  const auto mode = fuzz_mode(V, rng);
  const auto p_mode = fuzz_mode(V, rng);
  const auto q_hat = truncate(q, mode).q_hat;
  // Half the quadruples use an unrelated P̂.
  const auto p_hat = rng.next() % 2 ? truncate(p, p_mode).q_hat : random_categorical(V, rng, cfg.sparsity);

  std::vector<BoundReport> out;
  out.push_back(check_sigma_identity(q, mode));
  out.push_back(check_acceptance_drift(p, q, mode));
  out.push_back(check_tv_triangle(p, q, q_hat));
  out.back().truncation = describe(mode);
  out.push_back(check_tv_double_triangle(p, q, p_hat, q_hat));
  out.back().truncation = describe(mode);
  out.push_back(check_lossless_sc(p, q_hat));
  out.back().truncation = describe(mode);
  for (std::size_t k = 1; k <= 3; ++k) {
    out.push_back(check_lossless_mc(p, q_hat, k));
    out.back().truncation = describe(mode);
  }
  for (auto& r : out) r.seed = seed;
  return out;
}

std::vector<BoundReport> chain_instance(const TheoryCampaignConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const auto p = random_categorical(cfg.chain_vocab, rng, cfg.sparsity);
  const auto q = random_categorical(cfg.chain_vocab, rng, cfg.sparsity);
  auto out = check_residual_chain(p, q, TopK{cfg.chain_top_k}, cfg.chain_depth);
  for (auto& r : out) r.seed = seed;
  return out;
}

}  // namespace

TheoryCampaignResult run_theory_campaign(const TheoryCampaignConfig& config) {
  if (config.min_vocab < 1 || config.max_vocab < config.min_vocab) {
    throw std::invalid_argument("theory vocabulary range is empty");
  }
  if (config.chain_top_k < 1 || config.chain_top_k > config.chain_vocab) {
    throw std::invalid_argument("chain_top_k must lie in 1..chain_vocab");
  }
  if (config.chain_depth < 1) throw std::invalid_argument("chain_depth must be >= 1");

  const std::size_t n = config.instances + config.chain_instances;
  std::vector<std::vector<BoundReport>> slots(n);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    if (i < config.instances) {
      slots[i] = fuzz_instance(config, derive_seed(config.seed, {0, i}));
    } else {
      slots[i] = chain_instance(config, derive_seed(config.seed, {1, i - config.instances}));
    }
  });

  TheoryCampaignResult res;
  std::map<std::string, CheckSummary> by_check;
  for (std::size_t i = 0; i < n; ++i) {
    bool chain_floor_noted = false;
    for (auto& r : slots[i]) {
      auto& sum = by_check[r.check];
      sum.check = r.check;
      ++sum.count;
      if (r.vacuous) ++sum.vacuous, ++res.vacuous;
      if (r.asserted) {
        if (sum.asserted == 0 || r.slack() < sum.tightest.slack()) sum.tightest = r;
        ++sum.asserted;
      }
      if (r.violated()) ++sum.violations, ++res.violations;
      if (i >= config.instances && !chain_floor_noted && r.note == "below residual floor") {
        chain_floor_noted = true;
      }
      res.reports.push_back(std::move(r));
    }
    if (i >= config.instances) {
      if (chain_floor_noted) ++res.chains_below_floor;
      else ++res.chains_asserted;
    }
  }
  for (const auto& name : check_order()) {
    auto it = by_check.find(name);
    if (it != by_check.end()) res.summaries.push_back(it->second);
  }
  return res;
}

}  // namespace tslt
