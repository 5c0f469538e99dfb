// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

// Counter-based random draws. Every value is a pure function of
// (seed, stream, index) so simulations are reproducible bit-for-bit across
// platforms and independent of evaluation order.

namespace rfidalign::rng {

/// Independent substreams used by the simulator.
enum class Stream : std::uint64_t {
    PhaseNoise = 1,
    ReadMiss = 2,
    TagOffset = 3,
    GpsNoise = 4,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

/// Uniform in [0, 1).
constexpr double uniform(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept
{
    return static_cast<double>(hash(seed, stream, index) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two consecutive counters.
inline double gaussian(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept
{
    const double u1 = 1.0 - uniform(seed, stream, 2 * index);  // (0, 1]
    const double u2 = uniform(seed, stream, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace rfidalign::rng
