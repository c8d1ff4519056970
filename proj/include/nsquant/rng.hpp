#pragma once

#include <cstdint>
#include <random>

namespace nsquant {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic substream key: replicate/task streams are derived from
// (seed, stream, substream) so parallel schedules cannot change results.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t substream = 0) {
  std::uint64_t x = splitmix64(seed ^ (0xA24BAED4963EE407ULL * (stream + 1)));
  x = splitmix64(x ^ (0x9FB21C651E98DF25ULL * (substream + 1)));
  return x;
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0,
                                   std::uint64_t substream = 0) {
  const std::uint64_t k = derive_seed(seed, stream, substream);
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(splitmix64(k)),
                    static_cast<std::uint32_t>(splitmix64(k) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace nsquant
