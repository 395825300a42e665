#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ssridge {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for the stream identified by `(seed, tags...)`. Streams with distinct
/// tag tuples are statistically independent, and the result does not depend
/// on the order in which streams are created.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(seed, tags));
}

// Stream tags. Keep these stable: changing one changes every seeded output.
namespace tag {
inline constexpr std::uint64_t kFeatures = 0x1001;
inline constexpr std::uint64_t kNoise = 0x1002;
inline constexpr std::uint64_t kSubsets = 0x2001;
inline constexpr std::uint64_t kRandomFeatures = 0x2002;
inline constexpr std::uint64_t kProjection = 0x3001;
inline constexpr std::uint64_t kTestSet = 0x3002;
inline constexpr std::uint64_t kCell = 0x4001;
}  // namespace tag

}  // namespace ssridge
