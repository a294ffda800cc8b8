#pragma once

#include <cstdint>
#include <random>

namespace exdf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `stream` (and optional sub-stream) of a run seeded with
/// `seed`. Streams depend only on their indices, never on scheduling.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t substream = 0) {
  return mix64(mix64(mix64(seed) ^ (stream + 0x632be59bd9b4e019ULL)) ^
               (substream * 0x8cb92ba72f3d8dd7ULL + 1));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                    std::uint64_t substream = 0) {
  return Rng(stream_seed(seed, stream, substream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

} // namespace exdf
