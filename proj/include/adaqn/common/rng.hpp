#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace adaqn {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Independent generator for one concern of one run. Streams with different
/// labels never share state, so consuming draws for exploration cannot shift
/// the draws used for initialization or replay sampling.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t run_index, std::string_view label) {
    std::uint64_t s = detail::splitmix64(master_seed);
    s = detail::splitmix64(s ^ detail::splitmix64(run_index + 0x51ed270b27ULL));
    s = detail::splitmix64(s ^ detail::fnv1a(label));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace adaqn
