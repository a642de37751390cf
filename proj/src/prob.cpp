#include "tslt/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tslt {
namespace {

// Cumulative-mass comparisons tolerate rounding in the running sum, so that
// e.g. 0.5 + 0.3 counts as reaching 0.8.
constexpr double kCumulativeSlack = 1e-12;

double ordered_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void require_same_size(const Categorical& a, const Categorical& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("distribution size mismatch: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

}  // namespace

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("empty distribution");
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("negative or non-finite probability");
    }
  }
  const double mass = ordered_sum(probs_);
  if (std::abs(mass - 1.0) > kMassTolerance) {
    throw std::invalid_argument("probabilities sum to " + std::to_string(mass));
  }
}

Categorical Categorical::from_weights(std::vector<double> weights) {
  if (weights.empty()) throw std::invalid_argument("empty distribution");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("negative or non-finite weight");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("all weights are zero");
  for (double& w : weights) w /= total;
  return Categorical(std::move(weights), Unchecked{});
}

Categorical Categorical::uniform(std::size_t vocab_size) {
  if (vocab_size == 0) throw std::invalid_argument("empty vocabulary");
  return Categorical(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)),
                     Unchecked{});
}

Categorical Categorical::point_mass(std::size_t vocab_size, TokenId token) {
  if (token >= vocab_size) throw std::out_of_range("token outside vocabulary");
  std::vector<double> v(vocab_size, 0.0);
  v[token] = 1.0;
  return Categorical(std::move(v), Unchecked{});
}

double tv_distance(const Categorical& a, const Categorical& b) {
  require_same_size(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

double overlap_mass(const Categorical& a, const Categorical& b) {
  require_same_size(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::min(a[i], b[i]);
  return s;
}

std::string describe(const TruncationMode& mode) {
  std::ostringstream os;
  if (const auto* k = std::get_if<TopK>(&mode)) {
    os << "topk:" << k->k;
  } else {
    const auto& r = std::get<TopRho>(mode);
    os << (r.exclusive ? "toprho_excl:" : "toprho:") << r.rho;
  }
  return os.str();
}

std::vector<TokenId> descending_order(std::span<const double> weights) {
  std::vector<TokenId> order(weights.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return weights[a] > weights[b];
  });
  return order;
}

Truncation truncate(const Categorical& q, const TruncationMode& mode) {
  const std::size_t V = q.size();
  std::size_t keep = 0;
  const auto order = descending_order(q.probs());

  if (const auto* top_k = std::get_if<TopK>(&mode)) {
    if (top_k->k == 0 || top_k->k > V) {
      throw std::invalid_argument("TopK requires 1 <= K <= V, got K=" +
                                  std::to_string(top_k->k));
    }
    keep = top_k->k;
  } else {
    const auto& top_rho = std::get<TopRho>(mode);
    if (!(top_rho.rho > 0.0) || top_rho.rho > 1.0) {
      throw std::invalid_argument("TopRho requires rho in (0, 1]");
    }
    double cumulative = 0.0;
    keep = V;
    for (std::size_t n = 0; n < V; ++n) {
      const double next = cumulative + q[order[n]];
      if (next >= top_rho.rho - kCumulativeSlack) {
        keep = top_rho.exclusive ? n : n + 1;
        break;
      }
      cumulative = next;
    }
    keep = std::max<std::size_t>(keep, 1);
  }

  TruncationSpec spec{mode, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep)}, 0.0, 0.0};
  std::vector<bool> kept(V, false);
  for (TokenId t : spec.kept_set) kept[t] = true;

  // Masses are summed in ascending token order.
  for (std::size_t i = 0; i < V; ++i) {
    (kept[i] ? spec.kept_mass : spec.discarded_mass) += q[i];
  }

  if (keep == V) return Truncation{q, std::move(spec)};

  std::vector<double> q_hat(V, 0.0);
  for (std::size_t i = 0; i < V; ++i) {
    if (kept[i]) q_hat[i] = q[i] / spec.kept_mass;
  }
  return Truncation{Categorical(std::move(q_hat)), std::move(spec)};
}

Residual residual(const Categorical& p, const Categorical& q) {
  require_same_size(p, q);
  std::vector<double> r(p.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    r[i] = std::max(0.0, p[i] - q[i]);
    z += r[i];
  }
  if (z < kDegenerateResidual) return Residual{p, z, true};
  return Residual{Categorical::from_weights(std::move(r)), z, false};
}

TokenId sample(const Categorical& q, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0.0) last_positive = i;
    cumulative += q[i];
    if (u < cumulative) return static_cast<TokenId>(i);
  }
  // u landed in the rounding gap above the accumulated mass.
  return static_cast<TokenId>(last_positive);
}

SparseLogits::SparseLogits(std::vector<std::pair<TokenId, double>> entries,
                           std::size_t source_size)
    : entries_(std::move(entries)), source_size_(source_size) {
  if (entries_.empty()) throw std::invalid_argument("sparse logits need at least one entry");
  std::vector<bool> seen(source_size_, false);
  for (const auto& [id, value] : entries_) {
    if (id >= source_size_) throw std::out_of_range("token id outside vocabulary");
    if (seen[id]) throw std::invalid_argument("duplicate token id in sparse logits");
    if (!(value >= 0.0)) throw std::invalid_argument("negative sparse value");
    seen[id] = true;
  }
}

SparseLogits SparseLogits::from_truncation(const Truncation& t) {
  std::vector<std::pair<TokenId, double>> entries;
  entries.reserve(t.spec.kept_set.size());
  for (TokenId id : t.spec.kept_set) entries.emplace_back(id, t.q_hat[id]);
  return SparseLogits(std::move(entries), t.q_hat.size());
}

Categorical SparseLogits::expand() const {
  std::vector<double> dense(source_size_, 0.0);
  for (const auto& [id, value] : entries_) dense[id] = value;
  return Categorical::from_weights(std::move(dense));
}

std::size_t UplinkDist::entry_count() const {
  if (const auto* s = std::get_if<SparseLogits>(&payload_)) return s->entries().size();
  return std::get<Categorical>(payload_).size();
}

Categorical UplinkDist::reconstruct() const {
  if (const auto* s = std::get_if<SparseLogits>(&payload_)) return s->expand();
  return std::get<Categorical>(payload_);
}

}  // namespace tslt
