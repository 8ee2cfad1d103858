#pragma once

#include <cstdint>

namespace trajcurate {

/// SplitMix64 finalizer. Used to derive independent per-item seeds from a
/// run seed so results never depend on how work is scheduled.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

// Stream tags, one per consumer of randomness.
namespace streams {
inline constexpr std::uint64_t kPairSampling = 0x7061697273ull;
inline constexpr std::uint64_t kSplit = 0x73706c6974ull;
inline constexpr std::uint64_t kKmeans = 0x6b6d65616e73ull;
inline constexpr std::uint64_t kSynthTraj = 0x74726a00ull;
inline constexpr std::uint64_t kSynthGlobal = 0x676c6f62ull;
inline constexpr std::uint64_t kSynthDup = 0x64757073ull;
}  // namespace streams

}  // namespace trajcurate
