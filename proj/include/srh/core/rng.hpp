#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace srh {

using RngEngine = std::mt19937_64;

/// Named stream families. Each (family, keys...) tuple yields an independent engine so
/// results do not depend on evaluation order or worker count.
enum class StreamTag : std::uint64_t {
    initialisation = 1,
    mortality,
    internal_migration,
    emigration,
    immigration,
    fertility,
    marriage,
    education,
    employment,
    prediction,
    forecast,
    synthesis,
    survey,
    test,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                          std::initializer_list<std::uint64_t> keys) noexcept;

inline RngEngine substream(std::uint64_t master, StreamTag tag,
                           std::initializer_list<std::uint64_t> keys = {}) {
    return RngEngine{derive_seed(master, tag, keys)};
}

/// Uniform draw on [0, 1).
inline double uniform01(RngEngine &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(RngEngine &rng, double p) { return uniform01(rng) < p; }

/// Uniform integer on [0, n). n must be positive.
inline std::size_t uniform_index(RngEngine &rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>{0, n - 1}(rng);
}

} // namespace srh
