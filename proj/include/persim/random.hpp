#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace persim {

/// Derives an independent child seed from (seed, stream id). SplitMix64
/// finalizer; child streams for distinct ids do not overlap in practice.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a. Used to fold string ids (variable ids, respondent ids) into
/// seed derivation so draws stay stable across run orders and platforms.
constexpr std::uint64_t hash_text(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seeded RNG with hand-rolled bounded draws. std::uniform_int_distribution
/// is implementation-defined, which would break cross-toolchain determinism.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform draw from [0, n). Requires n >= 1.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }

  /// In-place partial Fisher-Yates: after the call, the first `take`
  /// elements of `items` are a uniform sample without replacement.
  template <typename T>
  void partial_shuffle(std::vector<T>& items, std::size_t take) {
    const std::size_t limit = take < items.size() ? take : items.size();
    for (std::size_t i = 0; i < limit; ++i) {
      std::size_t j = i + uniform_index(items.size() - i);
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace persim
