#pragma once

#include <cstdint>
#include <random>

namespace icv::detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent sub-seed for replication / stream `counter` of a base seed.
constexpr std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t counter) noexcept {
    return splitmix64(seed ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
}

using Rng = std::mt19937_64;

} // namespace icv::detail
