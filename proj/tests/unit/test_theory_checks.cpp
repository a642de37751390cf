#include <doctest.h>

#include <stdexcept>

#include "tslt/theory_checks.hpp"

using namespace tslt;

TEST_CASE("sigma identity examples") {
  auto r = check_sigma_identity(Categorical::uniform(4), TopK{2});
  CHECK(r.satisfied);
  CHECK(r.lhs <= 1e-15);
  CHECK(check_sigma_identity(Categorical({0.1, 0.9}), TopK{2}).lhs == 0.0);
}

TEST_CASE("robustness bound is tight on an adversarial target") {
  // p lives entirely on the discarded set.
  auto q = Categorical({0.4, 0.3, 0.2, 0.1});
  auto p = Categorical({0.0, 0.0, 0.5, 0.5});
  auto r = check_acceptance_drift(p, q, TopK{2});
  CHECK(r.lhs == doctest::Approx(0.3));
  CHECK(r.rhs == doctest::Approx(0.3));
  CHECK(r.satisfied);
  CHECK(r.slack() == doctest::Approx(0.0).epsilon(1e-12));

  auto none = check_acceptance_drift(p, q, TopK{4});
  CHECK(none.lhs == 0.0);
  CHECK(none.rhs == 0.0);
}

TEST_CASE("tv triangle checks") {
  auto p = Categorical({0.5, 0.5});
  auto q = Categorical({0.2, 0.8});
  CHECK(check_tv_triangle(p, q, q).lhs == 0.0);
  // equality case: q_hat = p
  auto eq = check_tv_triangle(p, q, p);
  CHECK(eq.lhs == doctest::Approx(eq.rhs));
  CHECK(check_tv_double_triangle(p, q, p, q).lhs == 0.0);
}

TEST_CASE("residual chains") {
  auto p = Categorical({0.3, 0.3, 0.2, 0.1, 0.05, 0.05, 0.0, 0.0});
  auto q = Categorical({0.05, 0.1, 0.1, 0.15, 0.2, 0.2, 0.1, 0.1});
  auto c = build_residual_chains(p, q, q, 4);
  CHECK(c.levels >= 2);
  CHECK(c.normalizer[1] == doctest::Approx(tv_distance(p, q)));
  for (std::size_t i = 0; i < c.levels; ++i) CHECK(c.exact[i] == c.truncated[i]);

  // q_hat = q: every lhs vanishes
  for (const auto& r : check_residual_chain(p, q, TopK{8}, 4)) {
    CHECK(r.lhs <= 1e-12);
    CHECK(r.satisfied);
  }

  bool saw_first_step = false;
  for (const auto& r : check_residual_chain(p, q, TopK{4}, 4)) {
    if (r.check == "residual_first_step") {
      saw_first_step = true;
      CHECK(r.level == 2);
    }
    CHECK_FALSE(r.violated());
  }
  CHECK(saw_first_step);
}

TEST_CASE("vacuous and below-floor chains are flagged") {
  // A draft that nearly covers p leaves tiny normalizers.
  auto p = Categorical({0.26, 0.24, 0.25, 0.25});
  auto q = Categorical({0.25, 0.25, 0.25, 0.25});
  auto reports = check_residual_chain(p, q, TopK{2}, 4);
  bool unasserted = false, vacuous = false;
  for (const auto& r : reports) {
    if (!r.asserted) unasserted = true;
    if (r.vacuous) vacuous = true;
    CHECK_FALSE(r.violated());
  }
  CHECK(unasserted);
  CHECK(vacuous);
}

TEST_CASE("lossless checks") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t V = 2 + rng.next() % 20;
    auto p = random_categorical(V, rng);
    auto q = truncate(random_categorical(V, rng), TopRho{0.5}).q_hat;
    CHECK(check_lossless_sc(p, q).satisfied);
    CHECK(check_lossless_mc(p, q, 3).satisfied);
  }
}

TEST_CASE("random_categorical") {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    auto c = random_categorical(10, rng, 0.9);
    std::size_t nz = 0;
    for (std::size_t x = 0; x < 10; ++x) nz += c[x] > 0.0;
    CHECK(nz >= 1);
  }
}

TEST_CASE("mass curve") {
  ModelPairParams mp;
  mp.vocab_size = 100;
  mp.concentration = 20.0;
  ModelPair m(mp);
  auto ctx = sample_contexts(100, 1, 50, 1);
  auto curve = topk_mass_curve(m, ctx, {1, 5, 10, 100});
  CHECK(curve.size() == 4);
  CHECK(curve.back().mean_mass == doctest::Approx(1.0));
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].mean_mass >= curve[i - 1].mean_mass);
}

TEST_CASE("theory campaign is clean and independent of jobs") {
  TheoryCampaignConfig cfg;
  cfg.seed = 3;
  cfg.instances = 400;
  cfg.chain_instances = 400;
  auto a = run_theory_campaign(cfg);
  cfg.jobs = 4;
  auto b = run_theory_campaign(cfg);
  CHECK(a.violations == 0);
  CHECK(a.chains_asserted > 0);
  CHECK(a.chains_asserted + a.chains_below_floor == 400);
  REQUIRE(a.reports.size() == b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(a.reports[i].check == b.reports[i].check);
    CHECK(a.reports[i].lhs == b.reports[i].lhs);
    CHECK(a.reports[i].rhs == b.reports[i].rhs);
  }
  REQUIRE(a.summaries.size() == b.summaries.size());
  for (std::size_t i = 0; i < a.summaries.size(); ++i) {
    CHECK(a.summaries[i].count == b.summaries[i].count);
    CHECK(a.summaries[i].tightest.lhs == b.summaries[i].tightest.lhs);
  }
}

TEST_CASE("acceptance campaign") {
  AcceptanceCampaignConfig cfg;
  cfg.model.vocab_size = 64;
  cfg.model.concentration = 3.0;
  cfg.model.divergence = 0.4;
  cfg.model.seed = 2;
  cfg.k_grid = {4, 16};
  cfg.rho_grid = {0.8};
  cfg.sessions = 6;
  cfg.session_tokens = 60;
  cfg.seed = 9;
  auto pts = acceptance_campaign(cfg);
  // (K=4, K=16, dense, rho) per mode
  REQUIRE(pts.size() == 8);
  CHECK(pts[2].dense);
  CHECK(pts[2].delta == 0.0);
  CHECK(pts[0].mean_kept == doctest::Approx(4.0));
  CHECK(pts[2].mean_kept == doctest::Approx(64.0));
  CHECK(pts[4].mode == DsdMode::kMulti);
  for (const auto& p : pts) {
    CHECK(p.sessions == 6);
    CHECK(p.alpha >= 0.0);
    CHECK(p.alpha <= 1.0);
    CHECK(p.tests >= p.accepts);
  }
  cfg.jobs = 3;
  auto again = acceptance_campaign(cfg);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].accepts == again[i].accepts);
    CHECK(pts[i].alpha_stderr == again[i].alpha_stderr);
  }
}
