#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stopchain {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to turn structured counters into seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a hash of a stream label, so sub-streams can be named instead of numbered.
constexpr std::uint64_t label_hash(std::string_view label) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of stream `stream`, counter `index` under master seed `seed`. Each
/// (seed, stream, index) triple gets its own engine, which makes results
/// independent of how work is split across threads.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return Engine(derive_seed(seed, stream, index));
}

}  // namespace stopchain
