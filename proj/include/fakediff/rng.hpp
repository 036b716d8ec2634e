#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace fakediff {

/// Substream families. Each (seed, stream, index) triple owns an independent engine.
enum class Stream : std::uint64_t {
    path = 1,      // Brownian increments of path `index`
    bernoulli = 2, // the mixing coin Z^c of path `index`
    embed = 3,     // Brownian motion driving embedding path `index`
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

using Engine = std::mt19937_64;

/// Ziggurat normal sampler; deterministic for a given engine state on every platform.
using StandardNormal = boost::random::normal_distribution<double>;

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t index) {
    return Engine(substream_seed(seed, stream, index));
}

/// Seed plus execution width. Results never depend on `threads`.
struct RNGConfig {
    std::uint64_t seed = 42;
    unsigned threads = 0; // 0: hardware concurrency
};

} // namespace fakediff
