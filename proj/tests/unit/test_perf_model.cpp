#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "tslt/perf_model.hpp"

using namespace tslt;

TEST_CASE("index bits and conventions") {
  CHECK(index_bits_for(32000) == 15);
  CHECK(index_bits_for(32768) == 15);
  CHECK(index_bits_for(32769) == 16);
  CHECK(index_bits_for(1) == 1);
  CHECK(index_bits_for(2) == 1);
  CHECK(parse_payload_convention("values_only") == PayloadConvention::kValuesOnly);
  CHECK_THROWS_AS(parse_payload_convention("eq4"), std::invalid_argument);
}

TEST_CASE("payload examples") {
  auto indexed = LinkModel::make(1e6, 32000);
  CHECK(indexed.b_idx == 15);
  CHECK(payload_bits(DraftShape{std::size_t{1}}, 32000, indexed) == 992000.0);
  auto t1 = LinkModel::make(1e6, 32000, 16, PayloadConvention::kValuesOnly);
  CHECK(payload_bits(DraftShape{std::size_t{1}}, 32000, t1) == 512000.0);
  CHECK(payload_bits(DraftShape{std::size_t{4}}, 320, indexed) == 39680.0);

  auto tree = DraftShape{ExpansionConfig({2, 2, 2})};
  CHECK(payload_bits(tree, 320, indexed) == 7.0 * 320 * 31);
  indexed.count_draft_token_ids = true;
  CHECK(payload_bits(tree, 320, indexed) == 7.0 * 320 * 31 + 14.0 * 15);

  CHECK_THROWS_AS(payload_bits(DraftShape{std::size_t{1}}, 0, t1), std::invalid_argument);
  CHECK_THROWS_AS(payload_bits(DraftShape{std::size_t{1}}, 32001, t1), std::invalid_argument);
}

TEST_CASE("link validation") {
  CHECK_THROWS_AS(LinkModel::make(0.0, 32000), std::invalid_argument);
  CHECK_THROWS_AS(LinkModel::make(1e6, 32000, 8), std::invalid_argument);
  CHECK_NOTHROW(LinkModel::make(1e6, 32000, 32));
  TimingModel bad{0.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("t_comm") {
  auto link = LinkModel::make(1e6, 32000);
  CHECK(t_comm(link, 0.0) == 0.0);
  CHECK(t_comm(link, 0.5e6) == doctest::Approx(0.5));
  auto fast = LinkModel::make(2e6, 32000);
  CHECK(t_comm(fast, 0.5e6) == doctest::Approx(0.25));
  CHECK_THROWS_AS(t_comm(link, -1.0), std::invalid_argument);
}

TEST_CASE("n_oracle_expected") {
  CHECK(n_oracle_expected(0.0, 4) == 1.0);
  CHECK(n_oracle_expected(0.5, 3) == doctest::Approx(1.875));
  CHECK(n_oracle_expected(1.0, 4) == 5.0);
  CHECK(n_oracle_expected(1.0 - 1e-12, 4) == doctest::Approx(5.0));
  CHECK(n_oracle_expected(0.8, 4) == doctest::Approx(3.36160));
  CHECK_THROWS_AS(n_oracle_expected(1.1, 4), std::invalid_argument);
  // continuous approaching 1
  CHECK(n_oracle_expected(0.999999, 4) == doctest::Approx(5.0).epsilon(1e-4));
}

TEST_CASE("speedup limits") {
  auto link = LinkModel::make(1e15, 32000);
  TimingModel timing{1e-12, 0.025};
  for (double a : {0.0, 0.3, 0.8}) {
    auto s = sc_throughput_and_speedup(link, timing, a, 4, 32000);
    CHECK(s.speedup == doctest::Approx(n_oracle_expected(a, 4)).epsilon(1e-6));
  }
  CHECK(sc_throughput_and_speedup(link, timing, 0.0, 1, 32000).speedup ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("truncated transmission beats dense at low uplink rate") {
  TimingModel timing{0.00125, 0.025};
  for (double mbps : {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
    auto link = LinkModel::make(mbps * 1e6, 32000);
    auto dense = sc_throughput_and_speedup(link, timing, 0.7, 4, 32000);
    auto k320 = sc_throughput_and_speedup(link, timing, 0.7, 4, 320);
    CHECK(k320.speedup > dense.speedup);
    CHECK(k320.payload_bits / dense.payload_bits == doctest::Approx(320.0 / 32000.0));
  }
}

TEST_CASE("speedup monotone in uplink rate and alpha") {
  TimingModel timing{0.00125, 0.025};
  ExpansionConfig tree({2, 2, 2});
  double prev_sc = 0.0, prev_mc = 0.0;
  for (double r = 1e5; r <= 1e9; r *= 1.7) {
    auto link = LinkModel::make(r, 32000);
    auto sc = sc_throughput_and_speedup(link, timing, 0.6, 4, 3200);
    auto mc = mc_throughput_and_speedup(link, timing, 0.6, tree, 3200);
    CHECK(sc.speedup >= prev_sc);
    CHECK(mc.speedup_from_throughput >= prev_mc);
    CHECK(mc.speedup <= 1.0);
    prev_sc = sc.speedup;
    prev_mc = mc.speedup_from_throughput;
  }
  auto link = LinkModel::make(1e7, 32000);
  double prev = 0.0;
  for (double a = 0.0; a <= 1.0; a += 0.05) {
    auto s = sc_throughput_and_speedup(link, timing, a, 4, 320).speedup;
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("multi-candidate model") {
  TimingModel timing{0.00125, 0.025};
  auto link = LinkModel::make(1e7, 32000);
  ExpansionConfig tree({2, 2, 2});
  auto m = mc_throughput_and_speedup(link, timing, 0.5, tree, 320);
  CHECK(m.n_oracle == doctest::Approx(2.5));
  CHECK(m.payload_bits == 7.0 * 320 * 31);
  const double overhead = 3 * 0.00125 + m.payload_bits / 1e7;
  CHECK(m.t_oracle == doctest::Approx(overhead + 0.025));
  CHECK(m.speedup == doctest::Approx(1.0 / (overhead / (2.5 * 0.025) + 1.0)));
  CHECK(m.speedup_from_throughput == doctest::Approx(2.5 * 0.025 / m.t_oracle));
}

TEST_CASE("t_dsd_total") {
  CHECK(t_dsd_total(1.0, 0.0, 0.5) == 1.0);
  CHECK(t_dsd_total(1.0, 10.0, 0.1) == doctest::Approx(2.0));
  CHECK(t_dsd_total(1.0, 10.0, 0.2) > t_dsd_total(1.0, 10.0, 0.1));
  CHECK(t_dsd_total(1.0, 11.0, 0.1) > t_dsd_total(1.0, 10.0, 0.1));
  CHECK_THROWS_AS(t_dsd_total(-1.0, 1.0, 1.0), std::invalid_argument);
}
