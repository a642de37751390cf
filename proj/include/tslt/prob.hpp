#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tslt/rng.hpp"

namespace tslt {

using TokenId = std::uint32_t;

/// Tolerance on the total mass of a valid distribution.
inline constexpr double kMassTolerance = 1e-9;
/// Residual normalizers below this are treated as degenerate.
inline constexpr double kDegenerateResidual = 1e-12;

/// Probability vector over a vocabulary of fixed size. Immutable after
/// construction; entries are non-negative and sum to 1 within kMassTolerance
/// (summed in ascending token order).
class Categorical {
 public:
  /// Validates `probs`; throws std::invalid_argument on negative entries,
  /// empty input, or mass off by more than kMassTolerance.
  explicit Categorical(std::vector<double> probs);

  /// Normalizes arbitrary non-negative weights. Throws if all are zero.
  static Categorical from_weights(std::vector<double> weights);
  static Categorical uniform(std::size_t vocab_size);
  static Categorical point_mass(std::size_t vocab_size, TokenId token);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

  bool operator==(const Categorical&) const = default;

 private:
  struct Unchecked {};
  Categorical(std::vector<double> probs, Unchecked) : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

/// ½·Σ|a(x)−b(x)|, summed in ascending index order.
double tv_distance(const Categorical& a, const Categorical& b);

/// Σ min(a(x), b(x)); equals 1 − tv_distance(a, b).
double overlap_mass(const Categorical& a, const Categorical& b);

struct TopK {
  std::size_t k = 1;
};

/// Nucleus truncation. By default the kept set is the smallest descending
/// prefix whose cumulative mass reaches `rho` (the crossing token is kept).
/// With `exclusive`, the prefix stops before the crossing token, i.e. the
/// largest prefix whose mass stays strictly below `rho` (at least one token).
struct TopRho {
  double rho = 1.0;
  bool exclusive = false;
};

using TruncationMode = std::variant<TopK, TopRho>;

std::string describe(const TruncationMode& mode);

struct TruncationSpec {
  TruncationMode mode;
  /// Token ids sorted by descending probability, ties by ascending id.
  std::vector<TokenId> kept_set;
  double kept_mass = 1.0;
  double discarded_mass = 0.0;
};

struct Truncation {
  Categorical q_hat;
  TruncationSpec spec;
};

/// Restricts `q` to the kept set of `mode` and renormalizes inside it.
/// Throws std::invalid_argument for K = 0, K > V, or rho outside (0, 1].
Truncation truncate(const Categorical& q, const TruncationMode& mode);

/// Descending-probability order with ascending-id tie break.
std::vector<TokenId> descending_order(std::span<const double> weights);

struct Residual {
  /// norm(max(0, p − q)); equal to `p` itself when degenerate.
  Categorical dist;
  /// Σ max(0, p − q) before normalization.
  double normalizer = 0.0;
  bool degenerate = false;
};

Residual residual(const Categorical& p, const Categorical& q);

/// Inverse-CDF draw, CDF accumulated in ascending token order. Consumes one
/// uniform from `rng`.
TokenId sample(const Categorical& q, Rng& rng);

/// Sparse (token id, value) list as shipped on the uplink. The receiver
/// renormalizes on expansion.
class SparseLogits {
 public:
  SparseLogits(std::vector<std::pair<TokenId, double>> entries,
               std::size_t source_size);

  /// Entries of `q_hat` restricted to `kept_set`, in kept-set order.
  static SparseLogits from_truncation(const Truncation& t);

  std::span<const std::pair<TokenId, double>> entries() const { return entries_; }
  std::size_t source_size() const { return source_size_; }

  /// Dense distribution supported exactly on the transmitted ids.
  Categorical expand() const;

 private:
  std::vector<std::pair<TokenId, double>> entries_;
  std::size_t source_size_;
};

/// One drafted distribution as carried on the uplink: dense (V entries) when
/// no truncation is active, sparse under truncated transmission.
class UplinkDist {
 public:
  explicit UplinkDist(Categorical dense) : payload_(std::move(dense)) {}
  explicit UplinkDist(SparseLogits sparse) : payload_(std::move(sparse)) {}

  bool is_sparse() const { return std::holds_alternative<SparseLogits>(payload_); }
  std::size_t entry_count() const;
  /// What the verifier reconstructs.
  Categorical reconstruct() const;

 private:
  std::variant<Categorical, SparseLogits> payload_;
};

}  // namespace tslt
