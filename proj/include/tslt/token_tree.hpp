#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tslt/prob.hpp"

namespace tslt {

/// Expansion configuration ⟨k_1, …, k_L⟩: every node on layer l (0 ≤ l < L)
/// has exactly k_{l+1} children.
class ExpansionConfig {
 public:
  explicit ExpansionConfig(std::vector<std::size_t> ks);

  /// Parses "2,2,2".
  static ExpansionConfig parse(std::string_view text);
  /// ⟨1, …, 1⟩ of length L: the single-candidate chain.
  static ExpansionConfig chain(std::size_t depth);

  std::size_t depth() const { return ks_.size(); }
  /// Branch count k_l for 1 ≤ l ≤ L.
  std::size_t branching(std::size_t l) const;
  const std::vector<std::size_t>& ks() const { return ks_; }

  /// W_l = Π_{j≤l} k_j, W_0 = 1.
  std::size_t width(std::size_t l) const;
  /// |𝒬| = 1 + Σ_{l=1}^{L−1} W_l: distributions uploaded per oracle.
  std::size_t dist_count() const;
  /// Σ_{l=1}^{L} W_l: drafted tokens uploaded per oracle.
  std::size_t token_count() const;

  std::string to_string() const;
  bool operator==(const ExpansionConfig&) const = default;

 private:
  std::vector<std::size_t> ks_;
};

/// Node position x_{l,i}. Layers count from 0 (the root / prefix); indices
/// within a layer count from 1.
struct NodeIndex {
  std::size_t layer = 0;
  std::size_t index = 1;
  bool operator==(const NodeIndex&) const = default;
};

/// Closed index interval within one layer, 1-based.
struct IndexRange {
  std::size_t first = 1;
  std::size_t last = 1;
  std::size_t size() const { return last - first + 1; }
  bool contains(std::size_t i) const { return first <= i && i <= last; }
  bool operator==(const IndexRange&) const = default;
};

/// Random stream owned by node x_{l,i} within one oracle call. Keying by
/// position makes results independent of the order nodes are processed in.
inline Rng node_stream(std::uint64_t oracle_seed, NodeIndex node) {
  return Rng(derive_seed(oracle_seed, {node.layer, node.index}));
}

/// Children of x_{l,i}: [(i−1)·k_{l+1}+1, i·k_{l+1}] on layer l+1.
IndexRange children_range(const ExpansionConfig& config, NodeIndex node);
/// Parent of x_{l,i} for l ≥ 1: x_{l−1, ⌈i/k_l⌉}.
NodeIndex parent_of(const ExpansionConfig& config, NodeIndex node);
void validate_node(const ExpansionConfig& config, NodeIndex node);

/// Canonical uplink serialization: layer-major, index-minor.
struct FlatTree {
  /// 𝒯 without the root: Σ_l W_l tokens.
  std::vector<TokenId> tokens;
  /// 𝒬: one distribution per internal node, |𝒬| entries.
  std::vector<UplinkDist> dists;
};

/// Draft token tree over a fixed prefix. Stores positions, so duplicate
/// sibling tokens are allowed.
class TokenTree {
 public:
  /// An empty tree; layers are filled with set_children().
  TokenTree(ExpansionConfig config, std::vector<TokenId> prefix);

  static TokenTree from_flat(ExpansionConfig config, std::vector<TokenId> prefix,
                             FlatTree flat);

  const ExpansionConfig& config() const { return config_; }
  const std::vector<TokenId>& prefix() const { return prefix_; }

  /// Token at x_{l,i}, l ≥ 1.
  TokenId token(NodeIndex node) const;
  /// Children tokens of x_{l,i} in position order.
  std::vector<TokenId> children(NodeIndex node) const;
  /// Draft distribution attached to internal node x_{l,i}.
  const UplinkDist& dist(NodeIndex node) const;

  /// Mass σ the device discarded when truncating Q_{l,i} (0 if unknown).
  double discarded_mass(NodeIndex node) const;

  /// Records the distribution and sampled children of internal node x_{l,i}.
  void set_children(NodeIndex node, UplinkDist dist, const std::vector<TokenId>& kids,
                    double discarded_mass = 0.0);

  /// S_x: the prefix followed by the l tokens on the ancestor chain.
  std::vector<TokenId> path_of(NodeIndex node) const;

  bool complete() const;
  FlatTree flatten_for_upload() const;

 private:
  std::size_t dist_slot(NodeIndex node) const;

  ExpansionConfig config_;
  std::vector<TokenId> prefix_;
  // layers_[l-1] holds W_l tokens for l = 1..L.
  std::vector<std::vector<TokenId>> layers_;
  // Flat layer-major storage of the |𝒬| internal-node distributions.
  std::vector<UplinkDist> dists_;
  std::vector<double> discarded_;
  std::vector<bool> filled_;
};

}  // namespace tslt
