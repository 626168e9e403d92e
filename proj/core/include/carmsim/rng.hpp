#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace carmsim {

/// Seed stream splitting.
///
/// Every random consumer derives its own engine seed from the invocation
/// seed, a stream tag and an index:
///
///   derive_seed(seed, tag, index) = mix(mix(seed ^ fnv1a(tag)) ^ index)
///
/// where mix is the SplitMix64 finalizer. Streams with different tags or
/// indices are statistically independent, and adding a new consumer never
/// perturbs the draws of an existing one.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept;

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    return Engine(derive_seed(seed, tag, index));
}

}  // namespace carmsim
