// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#include "rfidalign/phase_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace rfidalign;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Wavelength, Examples)
{
    EXPECT_NEAR(wavelength(910e6), 299792458.0 / 910e6, 1e-15);
    EXPECT_NEAR(wavelength(910e6), 0.329442, 1e-6);
    EXPECT_DOUBLE_EQ(wavelength(299792458.0), 1.0);
    EXPECT_DOUBLE_EQ(wavelength(1.0), 299792458.0);
    for (double bad : {0.0, -1.0}) {
        try {
            wavelength(bad);
            FAIL();
        } catch (const Error &e) {
            EXPECT_EQ(e.kind(), ErrorKind::Argument);
        }
    }
}

TEST(RadioConfig, CachesWavelength)
{
    const RadioConfig r(910e6, 25.0);
    EXPECT_EQ(r.wavelength(), wavelength(910e6));
    EXPECT_THROW(RadioConfig(-5.0, 25.0), Error);
}

TEST(RoundTripPhase, Examples)
{
    const double lambda = 0.329442;
    EXPECT_EQ(round_trip_phase(0.0, lambda), 0.0);
    EXPECT_NEAR(round_trip_phase(lambda / 2, lambda), 0.0, 1e-12);
    EXPECT_NEAR(round_trip_phase(0.2, lambda), 4 * kPi * 0.2 / lambda - 2 * kPi, 1e-12);
    EXPECT_NEAR(round_trip_phase(0.2, lambda), 1.3457, 5e-5);
    EXPECT_THROW(round_trip_phase(-0.1, lambda), Error);
}

TEST(RoundTripPhase, HalfWavelengthPeriodic)
{
    const double lambda = wavelength(910e6);
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (int i = 0; i < 100000; ++i) {
        const double d = u(gen);
        const double a = round_trip_phase(d, lambda);
        const double b = round_trip_phase(d + lambda / 2, lambda);
        // compare on the circle so 2*pi - eps and 0 count as equal
        const double diff = std::abs(std::remainder(a - b, 2 * kPi));
        EXPECT_LE(diff, 1e-12) << "d = " << d;
        EXPECT_GE(a, 0.0);
        EXPECT_LT(a, 2 * kPi);
    }
}

TEST(ObservedPhase, Examples)
{
    const RadioConfig radio(kSpeedOfLight / 0.329442, 25.0);
    EXPECT_EQ(observed_phase(0.0, radio, {0.0}), 0.0);
    EXPECT_DOUBLE_EQ(observed_phase(0.0, radio, {1.0}), 1.0);
    EXPECT_NEAR(observed_phase(0.2, radio, {0.0}), 1.3457, 5e-5);
}

TEST(ObservedPhase, ZeroOffsetIsRoundTrip)
{
    const RadioConfig radio;
    for (double d = 0.0; d < 5.0; d += 0.0137)
        EXPECT_EQ(observed_phase(d, radio, {0.0}), round_trip_phase(d, radio.wavelength()));
}

TEST(Folding, Examples)
{
    EXPECT_NEAR(fold_to_reader_deg(200.0 * kPi / 180.0).value(), 20.0, 1e-12);
    EXPECT_NEAR(fold_to_reader_deg(1.3457).value(), 1.3457 * 180.0 / kPi, 1e-12);
    EXPECT_NEAR(fold_to_reader_deg(1.3457).value(), 77.10, 5e-3);
    EXPECT_NEAR(fold_to_reader_deg(5.1601).value(), 115.65, 5e-3);
    EXPECT_EQ(fold_to_reader_deg(0.0).value(), 0.0);
    EXPECT_THROW(fold_to_reader_deg(NAN), Error);
}

TEST(Folding, ValueAlwaysInRange)
{
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(-1e4, 1e4);
    for (int i = 0; i < 100000; ++i) {
        const double v = fold_to_reader_deg(u(gen)).value();
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 180.0);
    }
    EXPECT_LT(fold_degrees(-1e-300).value(), 180.0);
    EXPECT_THROW(FoldedPhaseDeg(180.0), Error);
    EXPECT_THROW(FoldedPhaseDeg(-0.5), Error);
}

TEST(Folding, DoublingCommutesWithFolding)
{
    // 2 * fold(phi) and 2 * phi agree exactly as angles mod 360 degrees.
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 2 * kPi);
    for (int i = 0; i < 100000; ++i) {
        const double phi = u(gen);
        const double lhs = std::fmod(2.0 * fold_to_reader_deg(phi).value(), 360.0);
        const double rhs = std::fmod(2.0 * radians_to_degrees(phi), 360.0);
        EXPECT_EQ(lhs, rhs) << "phi = " << phi;
    }
}

TEST(Normalize, Examples)
{
    EXPECT_EQ(normalize_phase(FoldedPhaseDeg(0.0)), -1.0);
    EXPECT_EQ(normalize_phase(FoldedPhaseDeg(90.0)), 0.0);
    EXPECT_NEAR(normalize_phase(FoldedPhaseDeg(77.10)), 77.10 / 90.0 - 1.0, 1e-15);
    EXPECT_NEAR(normalize_phase(FoldedPhaseDeg(77.10)), -0.1433, 5e-5);
}

TEST(Normalize, BijectionRoundTrip)
{
    for (double p = 0.0; p < 180.0; p += 0.0173) {
        const double n = normalize_phase(FoldedPhaseDeg(p));
        EXPECT_GE(n, -1.0);
        EXPECT_LT(n, 1.0);
        EXPECT_NEAR(denormalize_phase(n), p, 1e-12);
    }
}

TEST(PhaseNoise, ZeroSigmaIsIdentity)
{
    const FoldedPhaseDeg p(42.5);
    for (std::uint64_t i = 0; i < 100; ++i)
        EXPECT_EQ(add_phase_noise(p, {0.0, 9}, i), p);
}

TEST(PhaseNoise, DeterministicPerDraw)
{
    const FoldedPhaseDeg p(100.0);
    const NoiseModel m{10.0, 1234};
    for (std::uint64_t i = 0; i < 100; ++i)
        EXPECT_EQ(add_phase_noise(p, m, i).value(), add_phase_noise(p, m, i).value());
    EXPECT_NE(add_phase_noise(p, m, 0).value(), add_phase_noise(p, m, 1).value());
    EXPECT_NE(add_phase_noise(p, m, 0).value(), add_phase_noise(p, {10.0, 1235}, 0).value());
    EXPECT_THROW(add_phase_noise(p, {-1.0, 0}, 0), Error);
}

TEST(PhaseNoise, CircularStdMatchesSigma)
{
    // Wrapped Gaussian on the doubled angle: R = exp(-(2 sigma)^2 / 2), so
    // sigma = sqrt(-2 ln R) / 2 with sigma in radians.
    const NoiseModel m{10.0, 77};
    const FoldedPhaseDeg p(3.0);  // near the fold to exercise wrapping
    std::complex<double> sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double residual = (add_phase_noise(p, m, static_cast<std::uint64_t>(i)).value() - p.value()) * kPi / 180.0;
        sum += std::exp(std::complex<double>(0.0, 2.0 * residual));
    }
    const double r = std::abs(sum) / n;
    const double sigma_deg = std::sqrt(-2.0 * std::log(r)) / 2.0 * 180.0 / kPi;
    EXPECT_NEAR(sigma_deg, 10.0, 0.2);
}

TEST(PhaseOffsets, WrapsIntoRange)
{
    EXPECT_NEAR(PhaseOffsets::from_radians(-1.0).combined_offset, 2 * kPi - 1.0, 1e-15);
    EXPECT_NEAR(PhaseOffsets::from_radians(7.0).combined_offset, 7.0 - 2 * kPi, 1e-15);
    EXPECT_THROW(PhaseOffsets::from_radians(INFINITY), Error);
}
