#pragma once

#include <cstdint>
#include <random>

namespace fat {

// Stream splitting: each (root seed, stream index) pair maps to an
// independent generator. The index is mixed into the seed with SplitMix64 so
// that nearby indices give unrelated streams; replication workers can then
// run in any order without affecting the draws.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_index) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream_index + 1)));
}

}  // namespace fat
