#pragma once

#include <cstdint>
#include <random>

namespace classy {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; decorrelates nearby integer seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed, a stream tag and an index.
/// Used wherever work is split across replicates, models or k values so that
/// results do not depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag, std::uint64_t index = 0) noexcept
{
    return mix_seed(mix_seed(mix_seed(parent) ^ tag) + index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

// Stream tags.
namespace stream {
inline constexpr std::uint64_t replicate = 0x7265706cULL;
inline constexpr std::uint64_t split = 0x73706c74ULL;
inline constexpr std::uint64_t pool = 0x706f6f6cULL;
inline constexpr std::uint64_t model = 0x6d6f646cULL;
inline constexpr std::uint64_t cluster = 0x636c7573ULL;
inline constexpr std::uint64_t lexigarden = 0x6c657869ULL;
inline constexpr std::uint64_t permutation = 0x7065726dULL;
} // namespace stream

} // namespace classy
