// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/rfidalign.hpp"
#include "reference_map.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace rfidalign;

inline const Vec3 kLabTag{0.75, 0.0, 0.0};
inline const Vec3 kLabStart{0.0, 0.2, 0.0};

inline std::filesystem::path scenario_dir() { return RFIDALIGN_SCENARIO_DIR; }

inline Trajectory lab_trajectory(const Vec3 &start = kLabStart)
{
    return stepped_trajectory(start, {0.005, 0.0, 0.0}, 0.1, 301);
}

inline SimScenario lab_sim(double sigma_deg, std::uint64_t seed, double offset_rad = 0.0)
{
    SimScenario s;
    s.tags = {{"E2003412B802011526", kLabTag, PhaseOffsets::from_radians(offset_rad)}};
    s.trajectory = lab_trajectory();
    s.noise = {sigma_deg, seed};
    s.seed = seed;
    return s;
}

/// Grid symmetric about the lab motion line (y = 0), z pinned.
inline GridSpec symmetric_grid(double half_x, double half_y, double resolution)
{
    GridSpec g;
    g.axes = {GridAxis::search(-half_x, half_x, resolution), GridAxis::search(-half_y, half_y, resolution),
              GridAxis::pinned(0.0)};
    return g;
}

/// Map computed by the straight-from-definition oracle.
inline std::vector<double> oracle_map(std::span<const ReadEvent> reads, const MotionModel &motion, const Vec3 &tag,
                                      const GridSpec &grid)
{
    std::vector<oracle::Point> disp;
    std::vector<oracle::Read> rd;
    for (const auto &r : reads) {
        const Vec3 d = motion.displacement(r.t);
        disp.push_back({d.x, d.y, d.z});
        rd.push_back({r.t, r.phase.value(), r.channel_hz});
    }
    std::vector<double> out(grid.cell_count());
    for (std::size_t c = 0; c < out.size(); ++c) {
        const Vec3 p = grid.cell_center(c);
        out[c] = oracle::cell_likelihood({p.x, p.y, p.z}, disp, {tag.x, tag.y, tag.z}, rd);
    }
    return out;
}

/// Random small estimation problem: straight or bent motion, random tag,
/// noise, offset and optional channel hopping. At most ~200 reads and
/// 1e4 cells.
struct Instance
{
    SimScenario sim;
    std::vector<ReadEvent> reads;
    GridSpec grid;
};

inline Instance random_instance(std::mt19937_64 &gen, bool straight = false)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Instance inst;
    auto &s = inst.sim;
    const Vec3 start{u(gen), u(gen), 0.3 * u(gen)};
    const Vec3 dir{std::cos(3.0 * u(gen)), std::sin(3.0 * u(gen)), 0.0};
    const double step = 0.005 + 0.02 * std::abs(u(gen));
    std::vector<TimedPose> poses;
    Vec3 p = start;
    const std::size_t n = 20 + gen() % 60;
    for (std::size_t k = 0; k < n; ++k) {
        poses.push_back({0.1 * static_cast<double>(k), p});
        Vec3 d = step * dir;
        if (!straight)
            d += Vec3{0.002 * u(gen), 0.002 * u(gen), 0.001 * u(gen)};
        p += d;
    }
    s.trajectory = Trajectory(std::move(poses));
    s.tags = {{"T", start + Vec3{0.5 * u(gen), 0.4 + 0.3 * std::abs(u(gen)), 0.1 * u(gen)},
               PhaseOffsets::from_radians(3.0 + 3.0 * u(gen))}};
    s.read_rate = std::min(200.0, 199.0 / std::max(s.trajectory.span(), 1e-3));
    s.noise = {10.0 * std::abs(u(gen)), gen()};
    s.seed = s.noise.seed;
    if (gen() % 3 == 0)
        s.hop_channels_hz = {902.75e6, 910.0e6, 927.25e6};
    inst.reads = simulate_reads(s);

    const double res = 0.004 + 0.004 * std::abs(u(gen));
    const std::size_t nx = 10 + gen() % 45, ny = 10 + gen() % 45;
    const std::size_t nz = gen() % 2 ? 1 : 1 + gen() % 3;
    GridSpec g;
    g.axes[0] = GridAxis::search(start.x - res * static_cast<double>(nx / 2),
                                 start.x + res * (static_cast<double>(nx - nx / 2) - 1.0), res);
    g.axes[1] = GridAxis::search(start.y - res * static_cast<double>(ny / 2),
                                 start.y + res * (static_cast<double>(ny - ny / 2) - 1.0), res);
    g.axes[2] = nz == 1 ? GridAxis::pinned(start.z)
                       : GridAxis::search(start.z - res, start.z + res * (static_cast<double>(nz) - 1.5), res);
    inst.grid = g;
    return inst;
}

} // namespace fixtures
