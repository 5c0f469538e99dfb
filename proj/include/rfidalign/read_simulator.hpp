// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/geometry.hpp"
#include "rfidalign/phase_model.hpp"
#include "rfidalign/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace rfidalign {

struct TagSpec
{
    std::string epc;  // hex identifier, at most 24 characters
    Vec3 position;
    PhaseOffsets offsets;
};

/// One successful inventory of one tag.
struct ReadEvent
{
    std::string epc;
    double t = 0.0;  // seconds
    FoldedPhaseDeg phase;
    double rssi_dbm = 0.0;
    double channel_hz = 0.0;

    friend bool operator==(const ReadEvent &, const ReadEvent &) = default;
};

struct MultipathModel
{
    bool enabled = false;
    double reflection_coefficient = -0.5;  // ground-bounce amplitude relative to the direct path
};

struct RssiModel
{
    double d0_m = 1.0;
    double p0_dbm = -55.0;
};

struct SimScenario
{
    RadioConfig radio;
    std::vector<double> hop_channels_hz;  // empty: every read on radio.frequency()
    std::vector<TagSpec> tags;
    Trajectory trajectory;
    double read_rate = 100.0;  // attempts per second
    double max_range = 5.0;    // meters
    double miss_probability = 0.0;
    NoiseModel noise;
    MultipathModel multipath;
    RssiModel rssi;
    std::uint64_t seed = 0;
};

/// Two-way log-distance path loss.
inline double rssi_model(double d, const RadioConfig & /*radio*/, double d0, double p0)
{
    if (!(d > 0.0))
        throw Error(ErrorKind::Argument, "RSSI model needs a positive distance");
    if (!(d0 > 0.0))
        throw Error(ErrorKind::Argument, "RSSI reference distance must be positive");
    return p0 - 40.0 * std::log10(d / d0);
}

/// Extra path length of the ground-reflected ray (mirror image in z = 0).
inline double two_ray_excess_path(const Vec3 &antenna, const Vec3 &tag)
{
    const double x = std::hypot(antenna.x - tag.x, antenna.y - tag.y);
    const double h_sum = antenna.z + tag.z;
    const double h_diff = antenna.z - tag.z;
    return std::max(0.0, std::hypot(h_sum, x) - std::hypot(h_diff, x));
}

inline void validate(const SimScenario &s)
{
    if (s.trajectory.empty())
        throw Error(ErrorKind::Argument, "scenario trajectory is empty");
    if (!(s.read_rate > 0.0) || !std::isfinite(s.read_rate))
        throw Error(ErrorKind::Argument, "read rate must be positive");
    if (!(s.max_range > 0.0))
        throw Error(ErrorKind::Argument, "max range must be positive");
    if (!(s.miss_probability >= 0.0 && s.miss_probability < 1.0))
        throw Error(ErrorKind::Argument, "miss probability must lie in [0, 1)");
    for (double f : s.hop_channels_hz)
        (void)wavelength(f);
    std::unordered_set<std::string> seen;
    for (const auto &tag : s.tags) {
        if (tag.epc.empty() || tag.epc.size() > 24)
            throw Error(ErrorKind::Argument, "tag EPC must have 1..24 characters");
        if (!seen.insert(tag.epc).second)
            throw Error(ErrorKind::Argument, "duplicate tag EPC " + tag.epc);
        if (!tag.position.finite())
            throw Error(ErrorKind::Argument, "tag " + tag.epc + " has a non-finite position");
    }
}

namespace detail {

/// Raw (unfolded) phase in radians including the optional ground bounce.
inline double raw_phase(const Vec3 &antenna, const TagSpec &tag, double d, double wavelength_m,
                        const MultipathModel &multipath)
{
    const double direct = round_trip_phase(d, wavelength_m);
    double phase = direct;
    if (multipath.enabled) {
        const double excess = two_ray_excess_path(antenna, tag.position);
        const double reflected = round_trip_phase(d + excess, wavelength_m);
        const std::complex<double> sum =
            std::polar(1.0, direct) + std::polar(multipath.reflection_coefficient, reflected);
        phase = std::arg(sum);
    }
    return wrap_two_pi(phase + tag.offsets.combined_offset);
}

} // namespace detail

/// Read attempts are issued every 1/read_rate seconds over the half-open
/// trajectory span [t_first, t_last), cycling through the tags in order.
/// A single-pose trajectory gets one attempt. Attempt j uses noise draw j.
inline std::vector<ReadEvent> simulate_reads(const SimScenario &s)
{
    validate(s);
    std::vector<ReadEvent> events;
    if (s.tags.empty())
        return events;

    const double t0 = s.trajectory.start_time();
    const double t_end = s.trajectory.end_time();
    const std::size_t n_tags = s.tags.size();

    for (std::uint64_t j = 0;; ++j) {
        const double t = t0 + static_cast<double>(j) / s.read_rate;
        if (j > 0 && !(t < t_end))
            break;
        const TagSpec &tag = s.tags[j % n_tags];
        const Vec3 antenna = position_at(s.trajectory, t);
        const double d = distance(antenna, tag.position);
        if (d > s.max_range)
            continue;
        if (s.miss_probability > 0.0 && rng::uniform(s.seed, rng::Stream::ReadMiss, j) < s.miss_probability)
            continue;

        const double channel =
            s.hop_channels_hz.empty() ? s.radio.frequency() : s.hop_channels_hz[j % s.hop_channels_hz.size()];
        const double phase_rad = detail::raw_phase(antenna, tag, d, wavelength(channel), s.multipath);

        ReadEvent ev;
        ev.epc = tag.epc;
        ev.t = t;
        ev.phase = add_phase_noise(fold_to_reader_deg(phase_rad), s.noise, j);
        ev.rssi_dbm = rssi_model(std::max(d, 1e-3), s.radio, s.rssi.d0_m, s.rssi.p0_dbm);
        ev.channel_hz = channel;
        events.push_back(std::move(ev));
    }
    // Attempts are already time-ordered; keep the documented (t, epc) order explicit.
    std::stable_sort(events.begin(), events.end(),
                     [](const ReadEvent &a, const ReadEvent &b) { return a.t < b.t || (a.t == b.t && a.epc < b.epc); });
    return events;
}

} // namespace rfidalign
