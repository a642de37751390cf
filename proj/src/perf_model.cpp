#include "tslt/perf_model.hpp"

#include <cmath>
#include <stdexcept>

namespace tslt {

std::string_view to_string(PayloadConvention c) {
  return c == PayloadConvention::kIndexed ? "indexed" : "values_only";
}

PayloadConvention parse_payload_convention(std::string_view text) {
  if (text == "indexed") return PayloadConvention::kIndexed;
  if (text == "values_only") return PayloadConvention::kValuesOnly;
  throw std::invalid_argument("payload_convention must be indexed or values_only, got '" +
                              std::string(text) + "'");
}

int index_bits_for(std::size_t vocab_size) {
  if (vocab_size == 0) throw std::invalid_argument("empty vocabulary");
  int bits = 0;
  while ((std::size_t{1} << bits) < vocab_size) ++bits;
  return bits == 0 ? 1 : bits;
}

LinkModel LinkModel::make(double uplink_bps, std::size_t vocab_size, int b_prob,
                          PayloadConvention convention) {
  LinkModel link;
  link.uplink_bps = uplink_bps;
  link.vocab_size = vocab_size;
  link.b_prob = b_prob;
  link.b_idx = index_bits_for(vocab_size);
  link.convention = convention;
  link.validate();
  return link;
}

int LinkModel::bits_per_entry() const {
  return convention == PayloadConvention::kIndexed ? b_prob + b_idx : b_prob;
}

void LinkModel::validate() const {
  if (!(uplink_bps > 0.0)) throw std::invalid_argument("uplink rate must be positive");
  if (b_prob != 16 && b_prob != 32) throw std::invalid_argument("b_prob must be 16 or 32");
  if (b_idx < 1) throw std::invalid_argument("b_idx must be positive");
  if (vocab_size == 0) throw std::invalid_argument("vocabulary size must be positive");
}

void TimingModel::validate() const {
  if (!(t_slm > 0.0) || !(t_llm > 0.0)) {
    throw std::invalid_argument("model runtimes must be positive");
  }
}

std::size_t uploaded_dist_count(const DraftShape& shape) {
  if (const auto* L = std::get_if<std::size_t>(&shape)) return *L;
  return std::get<ExpansionConfig>(shape).dist_count();
}

std::size_t uploaded_token_count(const DraftShape& shape) {
  if (const auto* L = std::get_if<std::size_t>(&shape)) return *L;
  return std::get<ExpansionConfig>(shape).token_count();
}

double payload_bits_for_entries(std::size_t total_entries, std::size_t drafted_tokens,
                                const LinkModel& link) {
  double bits = static_cast<double>(total_entries) * link.bits_per_entry();
  if (link.count_draft_token_ids) bits += static_cast<double>(drafted_tokens) * link.b_idx;
  return bits;
}

double payload_bits(const DraftShape& shape, std::size_t effective_vocab, const LinkModel& link) {
  if (effective_vocab == 0 || effective_vocab > link.vocab_size) {
    throw std::invalid_argument("effective vocabulary must lie in 1..V");
  }
  return payload_bits_for_entries(uploaded_dist_count(shape) * effective_vocab,
                                  uploaded_token_count(shape), link);
}

double t_comm(const LinkModel& link, double payload_bits) {
  if (payload_bits < 0.0) throw std::invalid_argument("negative payload");
  return payload_bits / link.uplink_bps;
}

double n_oracle_expected(double alpha, std::size_t draft_len) {
  if (!(alpha >= 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0, 1]");
  const double n = static_cast<double>(draft_len) + 1.0;
  if (1.0 - alpha < 1e-9) return n;
  return (1.0 - std::pow(alpha, n)) / (1.0 - alpha);
}

ThroughputSpeedup sc_throughput_and_speedup(const LinkModel& link, const TimingModel& timing,
                                            double alpha, std::size_t draft_len,
                                            std::size_t effective_vocab) {
  ThroughputSpeedup out;
  out.n_oracle = n_oracle_expected(alpha, draft_len);
  out.payload_bits = payload_bits(DraftShape{draft_len}, effective_vocab, link);
  out.t_comm = t_comm(link, out.payload_bits);
  out.t_oracle = static_cast<double>(draft_len) * timing.t_slm + out.t_comm + timing.t_llm;
  out.throughput = out.n_oracle / out.t_oracle;
  out.speedup = out.throughput * timing.t_llm;
  out.speedup_from_throughput = out.speedup;
  return out;
}

ThroughputSpeedup mc_throughput_and_speedup(const LinkModel& link, const TimingModel& timing,
                                            double alpha, const ExpansionConfig& config,
                                            std::size_t effective_vocab) {
  if (!(alpha >= 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0, 1]");
  ThroughputSpeedup out;
  const double L = static_cast<double>(config.depth());
  out.n_oracle = L * alpha + 1.0;
  // |𝒬|·T_V, where T_V is one distribution's transfer time.
  out.payload_bits = payload_bits(DraftShape{config}, effective_vocab, link);
  out.t_comm = t_comm(link, out.payload_bits);
  out.t_oracle = L * timing.t_slm + out.t_comm + timing.t_llm;
  out.throughput = out.n_oracle / out.t_oracle;
  const double overhead = L * timing.t_slm + out.t_comm;
  out.speedup = 1.0 / (overhead / (out.n_oracle * timing.t_llm) + 1.0);
  out.speedup_from_throughput = out.throughput * timing.t_llm;
  return out;
}

double t_dsd_total(double t_comp, double n_oracles, double t_comm_per_oracle) {
  if (t_comp < 0.0 || n_oracles < 0.0 || t_comm_per_oracle < 0.0) {
    throw std::invalid_argument("latency inputs must be non-negative");
  }
  return t_comp + n_oracles * t_comm_per_oracle;
}

}  // namespace tslt
