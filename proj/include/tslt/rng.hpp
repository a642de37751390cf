#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tslt {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a key path, e.g.
/// (oracle seed, layer, index). Order of keys matters.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(base);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Maps a 64-bit word to a double in [0, 1) using the top 53 bits.
constexpr double to_unit_interval(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Deterministic random stream. Wraps std::mt19937_64 (bit-identical across
/// standard libraries) and does its own real conversion, since the standard
/// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return to_unit_interval(engine_()); }

  /// New stream keyed by `keys`, seeded from this stream's next word.
  Rng split(std::initializer_list<std::uint64_t> keys) {
    return Rng(derive_seed(next(), keys));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tslt
