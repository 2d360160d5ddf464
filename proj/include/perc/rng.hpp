#pragma once

#include <cstdint>
#include <random>

namespace perc {

// Name recorded in cloud metadata and run manifests.
inline constexpr const char* kRngAlgorithm = "splitmix64+mt19937_64";

// SplitMix64 step (Steele, Lea & Flood). Used to scramble user seeds and to
// derive independent per-trial / per-resample stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives a stream seed from a base seed and up to two stream indices.
// Distinct (a, b) pairs give decorrelated streams for the same base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = base;
    std::uint64_t z = splitmix64(s);
    s = z ^ (a * 0x9e3779b97f4a7c15ull + 0x165667b19e3779f9ull);
    z = splitmix64(s);
    s = z ^ (b * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
    return splitmix64(s);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) {
    std::uint64_t s = seed;
    return Engine(splitmix64(s));
}

// Draws `m` distinct indices from [0, n) by partial Fisher-Yates.
// Result order is the draw order (not sorted).
inline std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t m,
                                                             Engine& eng) {
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
    for (std::size_t k = 0; k < m; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(idx[k], idx[pick(eng)]);
    }
    idx.resize(m);
    return idx;
}

} // namespace perc
