#include "tslt/synth_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tslt/rng.hpp"

namespace tslt {
namespace {

constexpr std::uint64_t kTargetStream = 0x7a7267;  // "zrg"
constexpr std::uint64_t kNoiseStream = 0x6e6f6973;  // "nois"
constexpr std::uint64_t kNoToken = ~std::uint64_t{0};

}  // namespace

void ModelPairParams::validate() const {
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  if (context_order < 0 || context_order > 2) {
    throw std::invalid_argument("context_order must be 0, 1 or 2");
  }
  if (!(divergence >= 0.0) || divergence > 1.0) {
    throw std::invalid_argument("divergence must lie in [0, 1]");
  }
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw std::invalid_argument("concentration must be positive");
  }
  if (!(noise_concentration >= 0.0) || !std::isfinite(noise_concentration)) {
    throw std::invalid_argument("noise_concentration must be >= 0 (0 = same as concentration)");
  }
}

ModelPair::ModelPair(ModelPairParams params) : params_(params) { params_.validate(); }

std::uint64_t ModelPair::context_key(std::uint64_t stream,
                                     std::span<const TokenId> context) const {
  std::uint64_t key = derive_seed(params_.seed, {stream});
  const auto order = static_cast<std::size_t>(params_.context_order);
  // Histories shorter than the order are padded with a sentinel on the left.
  for (std::size_t j = order; j > 0; --j) {
    const std::uint64_t tok =
        context.size() >= j ? static_cast<std::uint64_t>(context[context.size() - j]) : kNoToken;
    key = mix64(key ^ mix64(tok));
  }
  return key;
}

Categorical ModelPair::peaked(std::uint64_t key, double gamma) const {
  const std::size_t V = params_.vocab_size;
  std::vector<double> w(V);
  double max_w = 0.0;
  for (std::size_t i = 0; i < V; ++i) {
    // u in (0, 1]; never exactly zero so every token keeps positive weight
    // unless u^γ underflows.
    const double u = to_unit_interval(mix64(key + 0x9e3779b97f4a7c15ULL * (i + 1))) +
                     0x1.0p-54;
    w[i] = std::pow(u, gamma);
    max_w = std::max(max_w, w[i]);
  }
  if (!(max_w > 0.0)) {
    // Extreme γ underflows every weight; the limit is a point mass on argmax u.
    std::size_t best = 0;
    double best_u = -1.0;
    for (std::size_t i = 0; i < V; ++i) {
      const double u = to_unit_interval(mix64(key + 0x9e3779b97f4a7c15ULL * (i + 1)));
      if (u > best_u) best_u = u, best = i;
    }
    return Categorical::point_mass(V, static_cast<TokenId>(best));
  }
  return Categorical::from_weights(std::move(w));
}

Categorical ModelPair::target_dist(std::span<const TokenId> context) const {
  for (TokenId t : context) {
    if (t >= params_.vocab_size) throw std::out_of_range("context token outside vocabulary");
  }
  return peaked(context_key(kTargetStream, context), params_.concentration);
}

Categorical ModelPair::noise_dist(std::span<const TokenId> context) const {
  for (TokenId t : context) {
    if (t >= params_.vocab_size) throw std::out_of_range("context token outside vocabulary");
  }
  return peaked(context_key(kNoiseStream, context), params_.effective_noise_concentration());
}

Categorical ModelPair::draft_dist(std::span<const TokenId> context) const {
  auto p = target_dist(context);
  const double lambda = params_.divergence;
  if (lambda == 0.0) return p;
  const auto n = noise_dist(context);
  std::vector<double> q(p.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = (1.0 - lambda) * p[i] + lambda * n[i];
  return Categorical::from_weights(std::move(q));
}

ModelPair ModelPair::with_divergence(double divergence) const {
  auto p = params_;
  p.divergence = divergence;
  return ModelPair(p);
}

ModelPair ModelPair::with_concentration(double concentration) const {
  auto p = params_;
  p.concentration = concentration;
  return ModelPair(p);
}

NextTokenModel ModelPair::target() const {
  return [pair = *this](std::span<const TokenId> ctx) { return pair.target_dist(ctx); };
}

NextTokenModel ModelPair::draft() const {
  return [pair = *this](std::span<const TokenId> ctx) { return pair.draft_dist(ctx); };
}

std::vector<std::vector<TokenId>> sample_contexts(std::size_t vocab_size, int context_order,
                                                  std::size_t count, std::uint64_t seed) {
  if (context_order == 0) return {std::vector<TokenId>{}};
  std::vector<std::vector<TokenId>> out(count);
  Rng rng(derive_seed(seed, {0xc0ffee}));
  for (auto& ctx : out) {
    ctx.resize(static_cast<std::size_t>(context_order));
    for (auto& t : ctx) t = static_cast<TokenId>(rng.next() % vocab_size);
  }
  return out;
}

double mean_acceptance(const ModelPair& pair, const std::vector<std::vector<TokenId>>& contexts) {
  if (contexts.empty()) throw std::invalid_argument("no contexts");
  double total = 0.0;
  for (const auto& ctx : contexts) {
    total += overlap_mass(pair.draft_dist(ctx), pair.target_dist(ctx));
  }
  return total / static_cast<double>(contexts.size());
}

double calibrate_alpha(const ModelPair& pair, double target_alpha,
                       const CalibrationOptions& options) {
  if (!(target_alpha > 0.0) || target_alpha > 1.0) {
    throw std::invalid_argument("target alpha must lie in (0, 1]");
  }
  const auto& p = pair.params();
  const auto contexts = sample_contexts(p.vocab_size, p.context_order, options.contexts, options.seed);
  auto measure = [&](double lambda) { return mean_acceptance(pair.with_divergence(lambda), contexts); };

  const double at_zero = measure(0.0);
  if (std::abs(at_zero - target_alpha) <= options.tolerance) return 0.0;
  const double at_one = measure(1.0);
  if (target_alpha > at_zero + options.tolerance || target_alpha < at_one - options.tolerance) {
    std::ostringstream os;
    os << "target alpha " << target_alpha << " outside achievable range [" << at_one << ", "
       << at_zero << "]";
    throw std::domain_error(os.str());
  }
  if (std::abs(at_one - target_alpha) <= options.tolerance) return 1.0;

  // Acceptance is non-increasing in λ.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double a = measure(mid);
    if (std::abs(a - target_alpha) <= options.tolerance) return mid;
    (a > target_alpha ? lo : hi) = mid;
  }
  throw std::runtime_error("alpha calibration did not converge");
}

double mean_top_k_mass(const ModelPair& pair, std::size_t k,
                       const std::vector<std::vector<TokenId>>& contexts) {
  if (k == 0 || k > pair.vocab_size()) throw std::invalid_argument("K must lie in 1..V");
  if (contexts.empty()) throw std::invalid_argument("no contexts");
  double total = 0.0;
  for (const auto& ctx : contexts) {
    auto dist = pair.target_dist(ctx);
    std::vector<double> v(dist.probs().begin(), dist.probs().end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end(),
                     std::greater<>());
    std::sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
    double mass = 0.0;
    for (std::size_t i = 0; i < k; ++i) mass += v[i];
    total += mass;
  }
  return total / static_cast<double>(contexts.size());
}

double calibrate_concentration(const ModelPair& pair, std::size_t k, double target_mass,
                               const CalibrationOptions& options) {
  if (!(target_mass > 0.0) || target_mass > 1.0) {
    throw std::invalid_argument("target mass must lie in (0, 1]");
  }
  const auto& p = pair.params();
  const auto contexts = sample_contexts(p.vocab_size, p.context_order, options.contexts, options.seed);
  auto measure = [&](double log_gamma) {
    return mean_top_k_mass(pair.with_concentration(std::exp(log_gamma)), k, contexts);
  };
  // Top-K mass grows with γ; bisect on log γ over [1e-3, 1e4].
  double lo = std::log(1e-3), hi = std::log(1e4);
  const double m_lo = measure(lo), m_hi = measure(hi);
  if (target_mass < m_lo - options.tolerance || target_mass > m_hi + options.tolerance) {
    std::ostringstream os;
    os << "top-" << k << " mass " << target_mass << " outside achievable range [" << m_lo
       << ", " << m_hi << "]";
    throw std::domain_error(os.str());
  }
  for (int it = 0; it < options.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double m = measure(mid);
    if (std::abs(m - target_mass) <= options.tolerance) return std::exp(mid);
    (m < target_mass ? lo : hi) = mid;
  }
  throw std::runtime_error("concentration calibration did not converge");
}

}  // namespace tslt
