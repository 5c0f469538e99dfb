// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/rng.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

// Backscatter phase physics. The reader reports
//
//     phase = (4*pi*d / lambda + offset) mod 2*pi
//
// folded once more to [0, 180) degrees by the reader hardware. `offset`
// lumps the transmit, receive and tag-reflection terms into a per-tag
// constant, which the coherent estimator never needs to know.

namespace rfidalign {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// x mod m in [0, m) for m > 0. `fmod` is exact; only the wrap of negative
/// remainders can round, and a result rounding up to m is mapped to 0.
inline double positive_mod(double x, double m) noexcept
{
    double r = std::fmod(x, m);
    if (r < 0.0)
        r += m;
    return r >= m ? 0.0 : r;
}

inline double wrap_two_pi(double radians) noexcept { return positive_mod(radians, kTwoPi); }

inline double wavelength(double frequency_hz)
{
    if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
        throw Error(ErrorKind::Argument, "frequency must be positive");
    return kSpeedOfLight / frequency_hz;
}

class RadioConfig
{
  public:
    RadioConfig() : RadioConfig(910e6, 25.0) {}
    RadioConfig(double frequency_hz, double tx_power_dbm)
        : frequency_(frequency_hz), tx_power_(tx_power_dbm), wavelength_(rfidalign::wavelength(frequency_hz))
    {
    }

    double frequency() const noexcept { return frequency_; }
    double tx_power() const noexcept { return tx_power_; }
    double wavelength() const noexcept { return wavelength_; }

  private:
    double frequency_;
    double tx_power_;
    double wavelength_;
};

/// Phase as reported by the reader, degrees in [0, 180).
class FoldedPhaseDeg
{
  public:
    constexpr FoldedPhaseDeg() = default;
    explicit FoldedPhaseDeg(double degrees) : value_(degrees)
    {
        if (!(degrees >= 0.0 && degrees < 180.0))
            throw Error(ErrorKind::Argument, "folded phase " + std::to_string(degrees) + " outside [0, 180)");
    }

    constexpr double value() const noexcept { return value_; }
    double radians() const noexcept { return value_ * std::numbers::pi / 180.0; }

    friend constexpr bool operator==(const FoldedPhaseDeg &, const FoldedPhaseDeg &) = default;

  private:
    double value_ = 0.0;
};

/// Lumped constant phase of transmit chain, receive chain and tag.
struct PhaseOffsets
{
    double combined_offset = 0.0;  // radians in [0, 2*pi)

    static PhaseOffsets from_radians(double radians)
    {
        if (!std::isfinite(radians))
            throw Error(ErrorKind::Argument, "phase offset must be finite");
        return {wrap_two_pi(radians)};
    }
};

struct NoiseModel
{
    double phase_sigma_deg = 10.0;  // wrapped-Gaussian std of the folded phase
    std::uint64_t seed = 0;
};

/// (4*pi*d / lambda) mod 2*pi, via the fractional number of half-wavelength
/// cycles so that d and d + lambda/2 land on the same value.
inline double round_trip_phase(double d, double wavelength_m)
{
    if (!(d >= 0.0))
        throw Error(ErrorKind::Argument, "distance must be non-negative");
    if (!(wavelength_m > 0.0))
        throw Error(ErrorKind::Argument, "wavelength must be positive");
    const double cycles = 2.0 * d / wavelength_m;
    const double phase = kTwoPi * (cycles - std::floor(cycles));
    return phase >= kTwoPi ? 0.0 : phase;
}

inline double observed_phase(double d, const RadioConfig &radio, const PhaseOffsets &offsets)
{
    return wrap_two_pi(round_trip_phase(d, radio.wavelength()) + offsets.combined_offset);
}

inline double radians_to_degrees(double radians) noexcept { return radians * 180.0 / std::numbers::pi; }

inline FoldedPhaseDeg fold_degrees(double degrees) { return FoldedPhaseDeg(positive_mod(degrees, 180.0)); }

inline FoldedPhaseDeg fold_to_reader_deg(double phase_rad)
{
    if (!std::isfinite(phase_rad))
        throw Error(ErrorKind::Argument, "phase must be finite");
    return fold_degrees(radians_to_degrees(phase_rad));
}

/// Affine map [0, 180) -> [-1, 1) used for logs and plots.
constexpr double normalize_phase(FoldedPhaseDeg p) noexcept { return p.value() / 90.0 - 1.0; }

constexpr double denormalize_phase(double normalized) noexcept { return (normalized + 1.0) * 90.0; }

/// Adds wrapped-Gaussian jitter; the draw is a pure function of
/// (model.seed, draw_index).
inline FoldedPhaseDeg add_phase_noise(FoldedPhaseDeg p, const NoiseModel &model, std::uint64_t draw_index)
{
    if (model.phase_sigma_deg == 0.0)
        return p;
    if (!(model.phase_sigma_deg > 0.0))
        throw Error(ErrorKind::Argument, "phase sigma must be non-negative");
    const double z = rng::gaussian(model.seed, rng::Stream::PhaseNoise, draw_index);
    return fold_degrees(p.value() + model.phase_sigma_deg * z);
}

} // namespace rfidalign
