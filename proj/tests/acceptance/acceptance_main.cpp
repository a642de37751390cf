// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tslt/campaign.hpp"
#include "tslt/config.hpp"
#include "tslt/sd_multi.hpp"
#include "tslt/sd_single.hpp"
#include "tslt/theory_checks.hpp"

using namespace tslt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string num(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

// ---- AC1 ----------------------------------------------------------------

Outcome ac1_exact_lossless() {
  const auto t0 = Clock::now();
  const std::size_t n = 10000;
  std::size_t bad = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(0xac1, {i}));
    const std::size_t V = 2 + rng.next() % 63;
    const auto p = random_categorical(V, rng);
    const auto q = random_categorical(V, rng);
    TruncationMode mode = TopK{1 + rng.next() % V};
    if (rng.next() % 2) mode = TopRho{0.1 * static_cast<double>(1 + rng.next() % 10)};
    const auto q_hat = truncate(q, mode).q_hat;
    auto r = check_lossless_sc(p, q_hat);
    worst = std::max(worst, r.lhs);
    bad += !r.satisfied;
    for (std::size_t k = 1; k <= 3; ++k) {
      auto m = check_lossless_mc(p, q_hat, k);
      worst = std::max(worst, m.lhs);
      bad += !m.satisfied;
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 30.0,
          std::to_string(n) + " instances x (sc + mc k=1..3), failures=" + std::to_string(bad) +
              ", max |law-P|=" + num(worst, 3) + ", " + num(secs, 3) + " s"};
}

// ---- AC2 ----------------------------------------------------------------

Outcome ac2_monte_carlo_lossless() {
  const auto t0 = Clock::now();
  ModelPairParams mp;
  mp.vocab_size = 8;
  mp.context_order = 0;
  mp.divergence = 0.6;
  mp.concentration = 1.5;
  mp.seed = 0xac2;
  const ModelPair m(mp);
  const auto p = m.target_dist(std::vector<TokenId>{});
  const TruncationMode trunc = TopK{3};
  const std::size_t n = 100000;
  std::vector<double> sc(8, 0.0), mc(8, 0.0);
  Rng rng(derive_seed(0xac2, {0}));
  const ExpansionConfig tree_cfg({2, 2});
  for (std::size_t i = 0; i < n; ++i) {
    auto batch = tok_seq_draft({}, m.draft(), 4, trunc, rng);
    sc[tok_seq_veri({}, m.target(), batch, rng).tokens[0]] += 1.0;
    auto tree = tok_tree_draft({}, m.draft(), tree_cfg, trunc, rng);
    mc[tok_tree_veri({}, m.target(), tree, rng).tokens[0]] += 1.0;
  }
  const double tv_sc = tv_distance(Categorical::from_weights(sc), p);
  const double tv_mc = tv_distance(Categorical::from_weights(mc), p);
  const double secs = seconds_since(t0);
  return {tv_sc <= 0.01 && tv_mc <= 0.01 && secs < 60.0,
          "V=8 TopK(3) 1e5 runs: tv_sc=" + num(tv_sc) + " tv_mc=" + num(tv_mc) + ", " +
              num(secs, 3) + " s"};
}

// ---- AC3-AC5 ------------------------------------------------------------

const CheckSummary* find_summary(const TheoryCampaignResult& r, const std::string& name) {
  for (const auto& s : r.summaries) {
    if (s.check == name) return &s;
  }
  return nullptr;
}

Outcome theory_outcome(const TheoryCampaignResult& r, const std::vector<std::string>& checks,
                       std::size_t min_asserted) {
  bool pass = true;
  std::string detail;
  for (const auto& c : checks) {
    const auto* s = find_summary(r, c);
    if (!s) {
      pass = false;
      detail += c + ": missing; ";
      continue;
    }
    pass = pass && s->violations == 0 && s->asserted >= min_asserted;
    detail += c + ": " + std::to_string(s->asserted) + " asserted, " +
              std::to_string(s->violations) + " violations, min slack " +
              num(s->tightest.slack(), 3) + "; ";
  }
  return {pass, detail};
}

// ---- AC6 ----------------------------------------------------------------

Outcome ac6_tokens_per_oracle() {
  ModelPairParams mp;
  mp.vocab_size = 256;
  mp.context_order = 0;
  mp.concentration = 2.0;
  mp.seed = 0xac6;
  const ModelPair base(mp);
  CalibrationOptions opt;
  opt.tolerance = 0.002;
  const auto models = base.with_divergence(calibrate_alpha(base, 0.8, opt));
  const double alpha = mean_acceptance(models, sample_contexts(256, 0, 1, 0));

  ScSessionConfig cfg;
  cfg.draft_len = 4;
  cfg.stop_len = 1;
  const auto draft = models.draft();
  const auto target = models.target();
  Rng rng(derive_seed(0xac6, {0}));
  const std::size_t oracles = 10000;
  std::size_t tokens = 0;
  std::vector<TokenId> seq;
  for (std::size_t i = 0; i < oracles; ++i) {
    auto batch = tok_seq_draft(seq, draft, 4, std::nullopt, rng);
    auto out = tok_seq_veri(seq, target, batch, rng);
    tokens += out.n_generated();
  }
  const double mean = static_cast<double>(tokens) / static_cast<double>(oracles);
  const double expected = n_oracle_expected(0.8, 4);
  const double rel = std::abs(mean - expected) / expected;
  return {std::abs(alpha - 0.8) <= 0.01 && rel <= 0.02,
          "calibrated alpha=" + num(alpha) + ", mean tokens/oracle=" + num(mean) +
              " vs " + num(expected) + " (rel err " + num(100 * rel, 3) + "%)"};
}

// ---- AC7/AC8 ------------------------------------------------------------

const AcceptanceRow* find_row(const CampaignReport& rep, DsdMode mode, const std::string& label,
                              std::size_t k_payload) {
  for (const auto& a : rep.acceptance) {
    if (a.mode == mode && a.point.label == label && (label != "topk" || a.point.k_payload == k_payload)) {
      return &a;
    }
  }
  return nullptr;
}

Outcome ac7_robustness(const CampaignReport& rep, const ExperimentConfig& cfg) {
  std::string detail;
  bool pass = true;
  const double mass = rep.calibration.top_mass;
  const bool mass_ok = std::abs(mass - cfg.model.top_mass) <= 0.02;
  pass = pass && mass_ok;
  detail += "top-1% mass=" + num(mass) + (mass_ok ? "" : " (off target)") + "; ";

  const std::size_t k1 = cfg.payload_vocab / 100;    // 1% of V
  const std::size_t k01 = cfg.payload_vocab / 1000;  // 0.1% of V
  for (auto mode : {DsdMode::kSingle, DsdMode::kMulti}) {
    const auto* r = find_row(rep, mode, "topk", k1);
    const auto* d = find_row(rep, mode, "dense", 0);
    const auto* s = find_row(rep, mode, "topk", k01);
    if (!r || !d || !s) return {false, "missing acceptance rows"};
    const double rhs = r->result.mean_sigma + 3 * r->result.delta_stderr;
    const bool ok = std::abs(r->result.delta) <= rhs + 1e-9;
    const double z = -s->result.delta / s->result.delta_stderr;
    const bool drop = z > 3.0;
    pass = pass && ok && drop;
    detail += std::string(to_string(mode)) + ": |dA(K=" + std::to_string(k1) + ")|=" +
              num(std::abs(r->result.delta)) + " <= " + num(rhs) + (ok ? "" : " FAILS") +
              ", drop at K=" + std::to_string(k01) + " z=" + num(z, 3) + (drop ? "" : " FAILS") + "; ";
  }

  // MC >= SC at every K: MC may not fall significantly below SC.
  std::size_t below = 0;
  double worst_z = 1e300;
  for (const auto& sc : rep.acceptance) {
    if (sc.mode != DsdMode::kSingle) continue;
    const auto* mc = find_row(rep, DsdMode::kMulti, sc.point.label, sc.point.k_payload);
    if (!mc) continue;
    if (sc.point.label == "toprho") continue;
    const double se = std::hypot(sc.result.alpha_stderr, mc->result.alpha_stderr);
    const double z = (mc->result.alpha - sc.result.alpha) / se;
    worst_z = std::min(worst_z, z);
    if (z < -3.0) ++below;
  }
  pass = pass && below == 0;
  detail += "MC vs SC min z=" + num(worst_z, 3) + ", significantly lower at " + std::to_string(below) +
            " K";
  return {pass, detail};
}

Outcome ac8_speedup(const CampaignReport& rep, const ExperimentConfig& cfg) {
  // curves[exp/mode/point] = (rate, S, S_thr) ascending in rate
  struct Pt {
    double r, s, st;
  };
  std::map<std::string, std::vector<Pt>> curves;
  for (const auto& s : rep.speedup) {
    const std::string pt = s.point.label == "dense" ? "dense"
                           : s.point.label == "topk" ? "k" + std::to_string(s.point.k_payload)
                                                     : "rho";
    curves[s.experiment + "/" + std::string(to_string(s.mode)) + "/" + pt].push_back(
        {s.r_up_bps, s.model.speedup, s.model.speedup_from_throughput});
  }
  const std::size_t kmin = cfg.payload_vocab / 1000;
  const std::size_t k1 = cfg.payload_vocab / 100;
  const std::size_t k10 = cfg.payload_vocab / 10;
  bool pass = true;
  std::string detail;
  std::size_t families = 0;
  for (const char* exp : {"speedup_indexed", "speedup_values_only"}) {
    for (const char* mode : {"sc", "mc"}) {
      const std::string pre = std::string(exp) + "/" + mode + "/";
      const auto& dense = curves[pre + "dense"];
      const auto& c32 = curves[pre + "k" + std::to_string(kmin)];
      const auto& c320 = curves[pre + "k" + std::to_string(k1)];
      const auto& c3200 = curves[pre + "k" + std::to_string(k10)];
      if (dense.empty() || c32.empty() || c320.empty() || c3200.empty()) {
        return {false, "missing speedup curves for " + pre};
      }
      ++families;
      for (int which = 0; which < 2; ++which) {
        auto S = [&](const Pt& p) { return which == 0 ? p.s : p.st; };
        bool dominate = true, gap = true;
        for (const auto* c : {&c320, &c3200}) {
          double prev_ratio = 1e300;
          for (std::size_t i = 0; i < dense.size(); ++i) {
            if (S((*c)[i]) < S(dense[i])) dominate = false;
            const double ratio = S((*c)[i]) / S(dense[i]);
            if (ratio > prev_ratio + 1e-12) gap = false;
            prev_ratio = ratio;
          }
        }
        const bool high = S(c32.back()) < S(c320.back());
        bool cross = false;
        for (std::size_t i = 0; i < c32.size(); ++i) cross = cross || S(c32[i]) > S(c320[i]);
        const bool ok = dominate && gap && high;
        pass = pass && ok;
        if (!ok || which == 0) {
          detail += pre + (which == 0 ? "S" : "S_thr") + ": " +
                    (dominate ? "K>=dense" : "K<dense somewhere") + ", " +
                    (gap ? "gap grows as R_up falls" : "gap not monotone") + ", " +
                    (high ? "K=" + std::to_string(kmin) + " below K=" + std::to_string(k1) +
                                " at top rate"
                          : "K=" + std::to_string(kmin) + " not below at top rate") +
                    (cross ? ", crossover in grid" : ", no crossover in grid") + "; ";
        }
      }
    }
  }
  detail += std::to_string(families) + " curve families";
  return {pass, detail};
}

// ---- AC9 ----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome ac9_determinism() {
  auto cfg = load_config(std::string(TSLT_SOURCE_DIR) + "/configs/smoke.yaml");
  const auto root = fs::temp_directory_path() / "tslt_acceptance_ac9";
  fs::remove_all(root);
  std::vector<fs::path> dirs;
  for (std::size_t j : {std::size_t{1}, std::size_t{8}, std::size_t{1}}) {
    cfg.jobs = j;
    const auto dir = root / ("run" + std::to_string(dirs.size()) + "_jobs" + std::to_string(j));
    write_outputs(run_campaign(cfg), cfg, dir.string());
    dirs.push_back(dir);
  }
  std::size_t files = 0, diffs = 0;
  for (const char* f : {"mass.csv", "acceptance.csv", "speedup.csv", "theory_report.csv", "summary.txt"}) {
    const auto ref = slurp(dirs[0] / f);
    ++files;
    for (std::size_t i = 1; i < dirs.size(); ++i) diffs += slurp(dirs[i] / f) != ref;
    if (ref.empty()) ++diffs;
  }
  fs::remove_all(root);
  return {diffs == 0, std::to_string(files) + " outputs compared across jobs 1/8/1 reruns, " +
                          std::to_string(diffs) + " differ"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* id, const char* what, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s -- %s\n", id, o.pass ? "PASS" : "FAIL", what, o.detail.c_str());
    std::fflush(stdout);
  };

  report("AC1", "exact losslessness", ac1_exact_lossless);
  report("AC2", "Monte Carlo losslessness", ac2_monte_carlo_lossless);

  TheoryCampaignConfig tc;
  tc.seed = 0xac3;
  tc.jobs = jobs();
  TheoryCampaignResult theory;
  try {
    theory = run_theory_campaign(tc);
  } catch (const std::exception& e) {
    std::printf("theory campaign failed: %s\n", e.what());
  }
  report("AC3", "truncation robustness bound", [&] {
    return theory_outcome(theory, {"sigma_identity", "acceptance_drift"}, 10000);
  });
  report("AC4", "tv triangle inequalities", [&] { return theory_outcome(theory, {"tv_triangle", "tv_double_triangle"}, 10000); });
  report("AC5", "residual chain bounds", [&] {
    auto o = theory_outcome(theory, {"z_identity", "residual_first_step", "residual_recursion", "chain_acceptance_drift"}, 1);
    o.pass = o.pass && theory.chains_asserted + theory.chains_below_floor == tc.chain_instances;
    o.detail += "chains asserted=" + std::to_string(theory.chains_asserted) +
                ", below floor (reported only)=" + std::to_string(theory.chains_below_floor);
    return o;
  });

  report("AC6", "tokens per oracle", ac6_tokens_per_oracle);

  ExperimentConfig cfg;
  CampaignReport rep;
  std::string campaign_error;
  try {
    cfg = load_config(std::string(TSLT_SOURCE_DIR) + "/configs/full_sweep.yaml");
    cfg.jobs = jobs();
    // The theory suite is covered above.
    cfg.theory.instances = 200;
    cfg.theory.chain_instances = 200;
    rep = run_campaign(cfg);
  } catch (const std::exception& e) {
    campaign_error = e.what();
  }
  report("AC7", "acceptance robustness under truncation", [&] {
    if (!campaign_error.empty()) return Outcome{false, campaign_error};
    return ac7_robustness(rep, cfg);
  });
  report("AC8", "speedup curves", [&] {
    if (!campaign_error.empty()) return Outcome{false, campaign_error};
    return ac8_speedup(rep, cfg);
  });
  report("AC9", "determinism", ac9_determinism);

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
