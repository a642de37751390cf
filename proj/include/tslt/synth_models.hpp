#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tslt/prob.hpp"

namespace tslt {

/// Next-token distribution as a function of the full token history.
using NextTokenModel = std::function<Categorical(std::span<const TokenId>)>;

struct ModelPairParams {
  std::size_t vocab_size = 256;
  /// Tokens of history the conditional keys on, 0..2.
  int context_order = 1;
  /// λ: draft = (1 − λ)·target + λ·noise.
  double divergence = 0.0;
  /// γ: weights are u^γ for hashed uniforms u.
  double concentration = 1.0;
  /// Peaking exponent of the noise component; 0 reuses `concentration`.
  double noise_concentration = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  double effective_noise_concentration() const {
    return noise_concentration > 0.0 ? noise_concentration : concentration;
  }
};

/// Seeded synthetic target/draft pair. Distributions are pure functions of
/// (seed, last `context_order` tokens), generated by hashing rather than
/// stored tables.
class ModelPair {
 public:
  explicit ModelPair(ModelPairParams params);

  const ModelPairParams& params() const { return params_; }
  std::size_t vocab_size() const { return params_.vocab_size; }

  Categorical target_dist(std::span<const TokenId> context) const;
  Categorical draft_dist(std::span<const TokenId> context) const;
  /// The independent component mixed into the draft.
  Categorical noise_dist(std::span<const TokenId> context) const;

  ModelPair with_divergence(double divergence) const;
  ModelPair with_concentration(double concentration) const;

  NextTokenModel target() const;
  NextTokenModel draft() const;

 private:
  std::uint64_t context_key(std::uint64_t stream, std::span<const TokenId> context) const;
  Categorical peaked(std::uint64_t key, double gamma) const;

  ModelPairParams params_;
};

/// Seeded sample of contexts of length `context_order` (a single empty
/// context when the order is 0).
std::vector<std::vector<TokenId>> sample_contexts(std::size_t vocab_size, int context_order,
                                                  std::size_t count, std::uint64_t seed);

/// Mean of 1 − tv(draft, target) over `contexts`.
double mean_acceptance(const ModelPair& pair, const std::vector<std::vector<TokenId>>& contexts);

struct CalibrationOptions {
  std::size_t contexts = 1000;
  double tolerance = 0.01;
  std::uint64_t seed = 0x5eed;
  int max_iterations = 200;
};

/// Bisection on λ until the mean acceptance over a seeded context sample is
/// within `tolerance` of `target_alpha`. Throws std::domain_error naming the
/// achievable range when the target cannot be reached.
double calibrate_alpha(const ModelPair& pair, double target_alpha,
                       const CalibrationOptions& options = {});

/// Mean top-K probability mass of the target over `contexts`.
double mean_top_k_mass(const ModelPair& pair, std::size_t k,
                       const std::vector<std::vector<TokenId>>& contexts);

/// Bisection on γ so that the target's mean top-K mass is within `tolerance`
/// of `target_mass`.
double calibrate_concentration(const ModelPair& pair, std::size_t k, double target_mass,
                               const CalibrationOptions& options = {});

}  // namespace tslt
