#include "tslt/token_tree.hpp"

#include <charconv>
#include <stdexcept>

namespace tslt {

ExpansionConfig::ExpansionConfig(std::vector<std::size_t> ks) : ks_(std::move(ks)) {
  if (ks_.empty()) throw std::invalid_argument("expansion config needs at least one layer");
  for (auto k : ks_) {
    if (k == 0) throw std::invalid_argument("branch counts must be >= 1");
  }
}

ExpansionConfig ExpansionConfig::parse(std::string_view text) {
  std::vector<std::size_t> ks;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    auto item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    std::size_t k = 0;
    auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), k);
    if (ec != std::errc{} || end != item.data() + item.size() || item.empty()) {
      throw std::invalid_argument("bad expansion config '" + std::string(text) + "'");
    }
    ks.push_back(k);
    pos = comma + 1;
  }
  return ExpansionConfig(std::move(ks));
}

ExpansionConfig ExpansionConfig::chain(std::size_t depth) {
  return ExpansionConfig(std::vector<std::size_t>(depth, 1));
}

std::size_t ExpansionConfig::branching(std::size_t l) const {
  if (l < 1 || l > ks_.size()) throw std::out_of_range("layer outside 1..L");
  return ks_[l - 1];
}

std::size_t ExpansionConfig::width(std::size_t l) const {
  if (l > ks_.size()) throw std::out_of_range("layer outside 0..L");
  std::size_t w = 1;
  for (std::size_t j = 0; j < l; ++j) w *= ks_[j];
  return w;
}

std::size_t ExpansionConfig::dist_count() const {
  std::size_t n = 1;
  for (std::size_t l = 1; l < ks_.size(); ++l) n += width(l);
  return n;
}

std::size_t ExpansionConfig::token_count() const {
  std::size_t n = 0;
  for (std::size_t l = 1; l <= ks_.size(); ++l) n += width(l);
  return n;
}

std::string ExpansionConfig::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < ks_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ks_[i]);
  }
  return out;
}

void validate_node(const ExpansionConfig& config, NodeIndex node) {
  if (node.layer > config.depth() || node.index < 1 ||
      node.index > config.width(node.layer)) {
    throw std::out_of_range("no node (" + std::to_string(node.layer) + "," +
                            std::to_string(node.index) + ") in tree " +
                            config.to_string());
  }
}

IndexRange children_range(const ExpansionConfig& config, NodeIndex node) {
  validate_node(config, node);
  if (node.layer == config.depth()) throw std::out_of_range("leaf nodes have no children");
  const std::size_t k = config.branching(node.layer + 1);
  return IndexRange{(node.index - 1) * k + 1, node.index * k};
}

NodeIndex parent_of(const ExpansionConfig& config, NodeIndex node) {
  validate_node(config, node);
  if (node.layer == 0) throw std::out_of_range("the root has no parent");
  const std::size_t k = config.branching(node.layer);
  return NodeIndex{node.layer - 1, (node.index + k - 1) / k};
}

TokenTree::TokenTree(ExpansionConfig config, std::vector<TokenId> prefix)
    : config_(std::move(config)), prefix_(std::move(prefix)) {
  layers_.reserve(config_.depth());
  for (std::size_t l = 1; l <= config_.depth(); ++l) {
    layers_.emplace_back(config_.width(l), TokenId{0});
  }
  dists_.reserve(config_.dist_count());
  filled_.assign(config_.dist_count(), false);
}

std::size_t TokenTree::dist_slot(NodeIndex node) const {
  validate_node(config_, node);
  if (node.layer == config_.depth()) throw std::out_of_range("leaf nodes carry no draft distribution");
  std::size_t slot = 0;
  for (std::size_t l = 0; l < node.layer; ++l) slot += config_.width(l);
  return slot + node.index - 1;
}

TokenId TokenTree::token(NodeIndex node) const {
  validate_node(config_, node);
  if (node.layer == 0) throw std::out_of_range("the root carries the prefix, not a token");
  return layers_[node.layer - 1][node.index - 1];
}

std::vector<TokenId> TokenTree::children(NodeIndex node) const {
  const auto range = children_range(config_, node);
  const auto& layer = layers_[node.layer];
  return {layer.begin() + static_cast<std::ptrdiff_t>(range.first - 1),
          layer.begin() + static_cast<std::ptrdiff_t>(range.last)};
}

const UplinkDist& TokenTree::dist(NodeIndex node) const {
  const auto slot = dist_slot(node);
  if (!filled_[slot]) throw std::logic_error("node has not been expanded");
  return dists_[slot];
}

double TokenTree::discarded_mass(NodeIndex node) const {
  const auto slot = dist_slot(node);
  if (!filled_[slot]) throw std::logic_error("node has not been expanded");
  return discarded_[slot];
}

void TokenTree::set_children(NodeIndex node, UplinkDist dist, const std::vector<TokenId>& kids,
                             double discarded_mass) {
  const auto slot = dist_slot(node);
  const auto range = children_range(config_, node);
  if (kids.size() != range.size()) throw std::invalid_argument("wrong number of children");
  // Slots are filled in layer-major order so the flat vector stays aligned.
  if (slot != dists_.size()) throw std::logic_error("nodes must be expanded in layer-major order");
  dists_.push_back(std::move(dist));
  discarded_.push_back(discarded_mass);
  filled_[slot] = true;
  auto& layer = layers_[node.layer];
  for (std::size_t j = 0; j < kids.size(); ++j) layer[range.first - 1 + j] = kids[j];
}

std::vector<TokenId> TokenTree::path_of(NodeIndex node) const {
  validate_node(config_, node);
  std::vector<TokenId> tail(node.layer);
  NodeIndex cur = node;
  while (cur.layer > 0) {
    tail[cur.layer - 1] = token(cur);
    cur = parent_of(config_, cur);
  }
  std::vector<TokenId> path = prefix_;
  path.insert(path.end(), tail.begin(), tail.end());
  return path;
}

bool TokenTree::complete() const { return dists_.size() == config_.dist_count(); }

FlatTree TokenTree::flatten_for_upload() const {
  if (!complete()) throw std::logic_error("tree is not fully drafted");
  FlatTree flat;
  flat.tokens.reserve(config_.token_count());
  for (const auto& layer : layers_) flat.tokens.insert(flat.tokens.end(), layer.begin(), layer.end());
  flat.dists = dists_;
  return flat;
}

TokenTree TokenTree::from_flat(ExpansionConfig config, std::vector<TokenId> prefix, FlatTree flat) {
  TokenTree tree(std::move(config), std::move(prefix));
  const auto& cfg = tree.config_;
  if (flat.tokens.size() != cfg.token_count() || flat.dists.size() != cfg.dist_count()) {
    throw std::invalid_argument("flat tree does not match expansion config " + cfg.to_string());
  }
  std::size_t token_pos = 0;
  std::size_t dist_pos = 0;
  for (std::size_t l = 0; l < cfg.depth(); ++l) {
    const std::size_t k = cfg.branching(l + 1);
    for (std::size_t i = 1; i <= cfg.width(l); ++i) {
      std::vector<TokenId> kids(flat.tokens.begin() + static_cast<std::ptrdiff_t>(token_pos),
                                flat.tokens.begin() + static_cast<std::ptrdiff_t>(token_pos + k));
      tree.set_children(NodeIndex{l, i}, std::move(flat.dists[dist_pos++]), kids);
      token_pos += k;
    }
  }
  return tree;
}

}  // namespace tslt
