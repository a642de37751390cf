#include <doctest.h>

#include <stdexcept>

#include <algorithm>

#include "tslt/synth_models.hpp"

using namespace tslt;

namespace {

ModelPairParams base(std::size_t V = 256, int order = 1, double lambda = 0.3) {
  ModelPairParams p;
  p.vocab_size = V;
  p.context_order = order;
  p.divergence = lambda;
  p.concentration = 3.0;
  p.seed = 17;
  return p;
}

}  // namespace

TEST_CASE("model pair determinism and context keying") {
  ModelPair m(base());
  std::vector<TokenId> ctx{4, 9};
  CHECK(m.target_dist(ctx) == m.target_dist(ctx));
  CHECK(m.draft_dist(ctx) == ModelPair(base()).draft_dist(ctx));
  // order 1 only sees the last token
  std::vector<TokenId> other{5, 9};
  CHECK(m.target_dist(ctx) == m.target_dist(other));
  std::vector<TokenId> diff{4, 10};
  CHECK_FALSE(m.target_dist(ctx) == m.target_dist(diff));
  // seed changes the model
  auto p2 = base();
  p2.seed = 18;
  CHECK_FALSE(ModelPair(p2).target_dist(ctx) == m.target_dist(ctx));
  // order 0 ignores context
  ModelPair m0(base(256, 0));
  CHECK(m0.target_dist(ctx) == m0.target_dist(std::vector<TokenId>{}));
  CHECK_THROWS_AS(m.target_dist(std::vector<TokenId>{256}), std::out_of_range);
}

TEST_CASE("parameter validation") {
  auto p = base();
  p.context_order = 3;
  CHECK_THROWS_AS(ModelPair{p}, std::invalid_argument);
  p = base();
  p.divergence = 1.5;
  CHECK_THROWS_AS(ModelPair{p}, std::invalid_argument);
  p = base();
  p.concentration = 0.0;
  CHECK_THROWS_AS(ModelPair{p}, std::invalid_argument);
  p = base();
  p.noise_concentration = -1.0;
  CHECK_THROWS_AS(ModelPair{p}, std::invalid_argument);
}

TEST_CASE("draft is the stated mixture") {
  ModelPair m(base(64, 1, 0.25));
  std::vector<TokenId> ctx{3};
  auto p = m.target_dist(ctx), n = m.noise_dist(ctx), q = m.draft_dist(ctx);
  for (std::size_t i = 0; i < 64; ++i) CHECK(q[i] == doctest::Approx(0.75 * p[i] + 0.25 * n[i]));
  CHECK(ModelPair(base(64, 1, 0.0)).draft_dist(ctx) == p);
}

TEST_CASE("acceptance falls with divergence") {
  const auto contexts = sample_contexts(256, 1, 300, 5);
  ModelPair m(base(256, 1, 0.0));
  CHECK(mean_acceptance(m, contexts) == doctest::Approx(1.0));
  double prev = 1.0;
  for (double lambda : {0.1, 0.3, 0.6, 1.0}) {
    const double a = mean_acceptance(m.with_divergence(lambda), contexts);
    CHECK(a < prev);
    prev = a;
  }
  CHECK(prev < 0.6);
}

TEST_CASE("large concentration approaches a point mass") {
  auto p = base(256, 1, 0.0);
  p.concentration = 5000.0;
  ModelPair m(p);
  auto t = m.target_dist(std::vector<TokenId>{1});
  CHECK(*std::max_element(t.probs().begin(), t.probs().end()) > 0.95);
  p.concentration = 1e9;
  auto t2 = ModelPair(p).target_dist(std::vector<TokenId>{1});
  CHECK(*std::max_element(t2.probs().begin(), t2.probs().end()) == 1.0);
}

TEST_CASE("noise concentration only reshapes the noise component") {
  auto p = base(128, 1, 0.5);
  p.noise_concentration = 50.0;
  ModelPair sharp(p);
  ModelPair plain(base(128, 1, 0.5));
  std::vector<TokenId> ctx{2};
  CHECK(sharp.target_dist(ctx) == plain.target_dist(ctx));
  auto ns = sharp.noise_dist(ctx);
  auto np = plain.noise_dist(ctx);
  CHECK(*std::max_element(ns.probs().begin(), ns.probs().end()) >
        *std::max_element(np.probs().begin(), np.probs().end()));
}

TEST_CASE("alpha calibration") {
  ModelPair m(base(256, 1, 0.0));
  CalibrationOptions opt;
  opt.contexts = 400;
  opt.tolerance = 0.002;
  CHECK(calibrate_alpha(m, 1.0, opt) == 0.0);
  const double l8 = calibrate_alpha(m, 0.8, opt);
  const double l5 = calibrate_alpha(m, 0.5, opt);
  CHECK(l5 > l8);
  // re-measure on a fresh context sample
  const auto fresh = sample_contexts(256, 1, 1000, 999);
  const double a = mean_acceptance(m.with_divergence(l8), fresh);
  CHECK(a >= 0.79);
  CHECK(a <= 0.81);

  auto flat = base(256, 1, 0.0);
  flat.concentration = 0.01;
  try {
    calibrate_alpha(ModelPair(flat), 0.1, opt);
    FAIL("expected domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("achievable range") != std::string::npos);
  }
  CHECK_THROWS_AS(calibrate_alpha(m, 0.0, opt), std::invalid_argument);
}

TEST_CASE("concentration calibration") {
  ModelPair m(base(500, 1, 0.0));
  CalibrationOptions opt;
  opt.contexts = 200;
  opt.tolerance = 0.005;
  const double g = calibrate_concentration(m, 5, 0.85, opt);
  const auto ctx = sample_contexts(500, 1, 200, opt.seed);
  CHECK(mean_top_k_mass(m.with_concentration(g), 5, ctx) == doctest::Approx(0.85).epsilon(0.01));
  CHECK(mean_top_k_mass(m, 500, ctx) == doctest::Approx(1.0));
  CHECK_THROWS_AS(mean_top_k_mass(m, 0, ctx), std::invalid_argument);
}

TEST_CASE("sample_contexts") {
  CHECK(sample_contexts(10, 0, 50, 1).size() == 1);
  auto c = sample_contexts(10, 2, 50, 1);
  CHECK(c.size() == 50);
  for (const auto& x : c) {
    CHECK(x.size() == 2);
    for (auto t : x) CHECK(t < 10);
  }
  CHECK(c == sample_contexts(10, 2, 50, 1));
}
