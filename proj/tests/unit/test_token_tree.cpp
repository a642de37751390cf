#include <doctest.h>

#include <stdexcept>

#include "tslt/token_tree.hpp"

using namespace tslt;

namespace {

// Fills every internal node with a uniform dist and children numbered by
// position, so each token encodes its node.
TokenTree numbered_tree(const ExpansionConfig& cfg, std::vector<TokenId> prefix) {
  TokenTree tree(cfg, std::move(prefix));
  const std::size_t V = 1000;
  for (std::size_t l = 0; l < cfg.depth(); ++l) {
    for (std::size_t i = 1; i <= cfg.width(l); ++i) {
      auto r = children_range(cfg, {l, i});
      std::vector<TokenId> kids;
      for (auto c = r.first; c <= r.last; ++c) kids.push_back(static_cast<TokenId>(100 * (l + 1) + c));
      tree.set_children({l, i}, UplinkDist(Categorical::uniform(V)), kids, 0.01 * l);
    }
  }
  return tree;
}

}  // namespace

TEST_CASE("expansion config counts") {
  ExpansionConfig c({2, 2, 2});
  CHECK(c.depth() == 3);
  CHECK(c.width(0) == 1);
  CHECK(c.width(3) == 8);
  CHECK(c.token_count() == 14);
  CHECK(c.dist_count() == 7);

  ExpansionConfig one({1});
  CHECK(one.token_count() == 1);
  CHECK(one.dist_count() == 1);

  CHECK(ExpansionConfig::parse("2, 3,1") == ExpansionConfig({2, 3, 1}));
  CHECK(ExpansionConfig::chain(3) == ExpansionConfig({1, 1, 1}));
  CHECK_THROWS_AS(ExpansionConfig({}), std::invalid_argument);
  CHECK_THROWS_AS(ExpansionConfig({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(ExpansionConfig::parse("2,,2"), std::invalid_argument);
  CHECK_THROWS_AS(ExpansionConfig::parse("a"), std::invalid_argument);
}

TEST_CASE("children range and parent") {
  ExpansionConfig c({2, 2, 2});
  CHECK(children_range(c, {0, 1}) == IndexRange{1, 2});
  CHECK(children_range(c, {1, 2}) == IndexRange{3, 4});
  CHECK(parent_of(c, {2, 3}) == NodeIndex{1, 2});
  CHECK(parent_of(c, {3, 8}) == NodeIndex{2, 4});
  CHECK_THROWS_AS(children_range(c, {1, 3}), std::out_of_range);
  CHECK_THROWS_AS(children_range(c, {3, 1}), std::out_of_range);
  CHECK_THROWS_AS(parent_of(c, {0, 1}), std::out_of_range);
  CHECK_THROWS_AS(validate_node(c, {1, 0}), std::out_of_range);
}

TEST_CASE("children and parent are inverse on random configs") {
  Rng rng(3);
  for (int it = 0; it < 200; ++it) {
    std::vector<std::size_t> ks(1 + rng.next() % 4);
    for (auto& k : ks) k = 1 + rng.next() % 3;
    ExpansionConfig c(ks);
    std::size_t tokens = 0;
    for (std::size_t l = 1; l <= c.depth(); ++l) {
      tokens += c.width(l);
      CHECK(c.width(l) == c.width(l - 1) * c.branching(l));
      for (std::size_t i = 1; i <= c.width(l); ++i) {
        auto par = parent_of(c, {l, i});
        CHECK(children_range(c, par).contains(i));
      }
      // ranges of consecutive parents tile the layer
      std::size_t next = 1;
      for (std::size_t i = 1; i <= c.width(l - 1); ++i) {
        auto r = children_range(c, {l - 1, i});
        CHECK(r.first == next);
        CHECK(r.size() == c.branching(l));
        next = r.last + 1;
      }
      CHECK(next == c.width(l) + 1);
    }
    CHECK(tokens == c.token_count());
  }
}

TEST_CASE("paths") {
  ExpansionConfig c({2, 2, 2});
  auto tree = numbered_tree(c, {7, 8});
  CHECK(tree.complete());
  CHECK(tree.path_of({0, 1}) == std::vector<TokenId>{7, 8});
  CHECK(tree.path_of({1, 2}) == std::vector<TokenId>{7, 8, 102});
  CHECK(tree.path_of({3, 6}) == std::vector<TokenId>{7, 8, 102, 203, 306});
  for (std::size_t l = 0; l <= 3; ++l) {
    for (std::size_t i = 1; i <= c.width(l); ++i) CHECK(tree.path_of({l, i}).size() == 2 + l);
  }
  CHECK(tree.children({1, 2}) == std::vector<TokenId>{203, 204});
  CHECK(tree.discarded_mass({2, 1}) == doctest::Approx(0.02));
  CHECK_THROWS(tree.dist({3, 1}));
}

TEST_CASE("incomplete tree and bad children") {
  ExpansionConfig c({2, 2});
  TokenTree tree(c, {});
  CHECK_FALSE(tree.complete());
  CHECK_THROWS(tree.set_children({0, 1}, UplinkDist(Categorical::uniform(3)), {1}));
  CHECK_THROWS(tree.set_children({1, 1}, UplinkDist(Categorical::uniform(3)), {1, 2}));
  CHECK_THROWS(tree.flatten_for_upload());
}

TEST_CASE("flatten and round trip") {
  ExpansionConfig c({2, 2, 2});
  auto tree = numbered_tree(c, {1});
  auto flat = tree.flatten_for_upload();
  CHECK(flat.tokens.size() == 14);
  CHECK(flat.dists.size() == 7);
  CHECK(flat.tokens.front() == 101);
  CHECK(flat.tokens.back() == 308);

  auto back = TokenTree::from_flat(c, {1}, flat);
  for (std::size_t l = 1; l <= 3; ++l) {
    for (std::size_t i = 1; i <= c.width(l); ++i) CHECK(back.token({l, i}) == tree.token({l, i}));
  }
  CHECK(back.flatten_for_upload().tokens == flat.tokens);

  ExpansionConfig one({1});
  auto t1 = numbered_tree(one, {});
  auto f1 = t1.flatten_for_upload();
  CHECK(f1.tokens.size() == 1);
  CHECK(f1.dists.size() == 1);

  flat.tokens.pop_back();
  CHECK_THROWS(TokenTree::from_flat(c, {1}, flat));
}
