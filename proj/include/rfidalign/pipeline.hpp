// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/geometry.hpp"
#include "rfidalign/log_io.hpp"
#include "rfidalign/mle_estimator.hpp"
#include "rfidalign/read_simulator.hpp"
#include "rfidalign/rng.hpp"
#include "rfidalign/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

// End-to-end runs: scenario -> simulated reads (+ synthetic GPS) ->
// likelihood maps -> resolved estimate, and the Monte Carlo sweep built on
// top of them.

namespace rfidalign {

/// What the simulator knows and the estimator must not see.
struct GroundTruth
{
    std::string scenario;
    std::uint64_t seed = 0;
    Vec3 start;
    std::vector<TagSpec> tags;
};

inline json truth_to_json(const GroundTruth &t)
{
    json tags = json::array();
    for (const auto &tag : t.tags)
        tags.push_back({{"epc", tag.epc},
                        {"position", detail::vec_json(tag.position)},
                        {"offset_rad", tag.offsets.combined_offset}});
    return {{"scenario", t.scenario}, {"seed", t.seed}, {"true_start", detail::vec_json(t.start)}, {"tags", tags}};
}

inline GroundTruth truth_from_json(const json &j)
{
    using detail::ObjectReader;
    ObjectReader r(j, "", {"scenario", "seed", "true_start", "tags"});
    GroundTruth t;
    t.scenario = r.string("scenario", "");
    t.seed = r.unsigned_integer("seed", 0);
    t.start = r.vec3("true_start");
    if (r.has("tags")) {
        const auto &tags = r.at("tags");
        for (std::size_t i = 0; i < tags.size(); ++i) {
            ObjectReader tr(tags[i], "/tags/" + std::to_string(i), {"epc", "position", "offset_rad"});
            t.tags.push_back({tr.string("epc"), tr.vec3("position"), PhaseOffsets::from_radians(tr.number("offset_rad", 0.0))});
        }
    }
    return t;
}

/// Per-tag constant phase offsets; "random" tags draw uniformly in
/// [0, 2*pi) keyed by (seed, tag index).
inline std::vector<TagSpec> resolve_tags(const ScenarioConfig &c)
{
    std::vector<TagSpec> tags;
    tags.reserve(c.tags.size());
    for (std::size_t i = 0; i < c.tags.size(); ++i) {
        const auto &t = c.tags[i];
        const double offset = t.offset_rad ? *t.offset_rad : kTwoPi * rng::uniform(c.seed, rng::Stream::TagOffset, i);
        tags.push_back({t.epc, t.position, PhaseOffsets::from_radians(offset)});
    }
    return tags;
}

inline Trajectory read_gps_trajectory_file(const ScenarioConfig &c, const std::filesystem::path &path,
                                           bool lenient = false);

/// Trajectory the antenna actually followed.
inline Trajectory true_trajectory(const ScenarioConfig &c)
{
    if (c.trajectory.kind == TrajectoryKind::Stepped)
        return stepped_trajectory(c.trajectory.start, c.trajectory.step, c.trajectory.dwell_s, c.trajectory.n_steps);
    return read_gps_trajectory_file(c, c.base_dir / c.trajectory.path);
}

/// GPS fixes (GPS antenna) -> RFID antenna trajectory in the local frame.
inline Trajectory trajectory_from_gps(const ScenarioConfig &c, std::span<const GeoFix> fixes)
{
    if (fixes.empty())
        throw Error(ErrorKind::InsufficientData, "GPS track is empty");
    const GpsConfig gps = c.gps.value_or(GpsConfig{fixes.front(), {}, false, 10.0, 0.0, 0.0});
    const Trajectory gps_track = geo_to_local(fixes, gps.origin);
    if (gps.heading_from_track)
        return apply_lever_arm(gps_track, gps.lever_arm.offset, track_headings(gps_track));
    return apply_lever_arm(gps_track, gps.lever_arm);
}

inline Trajectory read_gps_trajectory_file(const ScenarioConfig &c, const std::filesystem::path &path, bool lenient)
{
    auto in = io::open_input(path.string());
    const auto fixes = io::parse_gps_log(in, {lenient}).items;
    return trajectory_from_gps(c, fixes);
}

/// Noisy GPS receiver track for a known RFID antenna trajectory: fixes at
/// `rate_hz` spanning the whole trajectory.
inline std::vector<GeoFix> synthesize_gps(const ScenarioConfig &c, const Trajectory &rfid_track)
{
    if (!c.gps)
        throw Error(ErrorKind::Config, "scenario has no gps section");
    const GpsConfig &gps = *c.gps;
    const double t0 = rfid_track.start_time();
    const double t1 = rfid_track.end_time();
    std::vector<double> times;
    for (std::size_t i = 0;; ++i) {
        const double t = t0 + static_cast<double>(i) / gps.rate_hz;
        if (t > t1)
            break;
        times.push_back(t);
    }
    if (times.back() < t1)
        times.push_back(t1);

    std::vector<double> headings;
    if (gps.heading_from_track && rfid_track.size() >= 2 && rfid_track.span() >= 0.5) {
        for (double t : times) {
            const double ta = std::max(t0, std::min(t, t1 - 0.5));
            const Vec3 d = position_at(rfid_track, ta + 0.5) - position_at(rfid_track, ta);
            headings.push_back(std::atan2(d.y, d.x));
        }
    }

    // First-order Gauss-Markov error per axis: stationary std
    // position_sigma_m, correlation time correlation_time_s (0: white).
    std::vector<GeoFix> fixes;
    fixes.reserve(times.size());
    Vec3 err;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double w[3] = {rng::gaussian(c.seed, rng::Stream::GpsNoise, 3 * i),
                             rng::gaussian(c.seed, rng::Stream::GpsNoise, 3 * i + 1),
                             rng::gaussian(c.seed, rng::Stream::GpsNoise, 3 * i + 2)};
        const double a = (i == 0 || gps.correlation_time_s <= 0.0)
                             ? 0.0
                             : std::exp(-(times[i] - times[i - 1]) / gps.correlation_time_s);
        const double b = gps.position_sigma_m * std::sqrt(1.0 - a * a);
        err = {a * err.x + b * w[0], a * err.y + b * w[1], a * err.z + b * w[2]};

        const double heading = headings.empty() ? gps.lever_arm.heading : headings[i];
        const Vec3 p = position_at(rfid_track, times[i]) - rotate_z(gps.lever_arm.offset, heading) + err;
        fixes.push_back(local_to_geo(p, times[i], gps.origin));
    }
    return fixes;
}

struct Simulation
{
    std::vector<ReadEvent> reads;
    GroundTruth truth;
    Trajectory trajectory;
    std::vector<GeoFix> gps;  // only when the scenario has a gps section
};

inline SimScenario make_sim_scenario(const ScenarioConfig &c, Trajectory trajectory)
{
    SimScenario s;
    s.radio = c.radio();
    s.hop_channels_hz = c.hop_channels_hz;
    s.tags = resolve_tags(c);
    s.trajectory = std::move(trajectory);
    s.read_rate = c.reader.read_rate_hz;
    s.max_range = c.reader.max_range_m;
    s.miss_probability = c.reader.miss_probability;
    s.noise = {c.phase_sigma_deg, c.seed};
    s.multipath = c.multipath;
    s.rssi = c.reader.rssi;
    s.seed = c.seed;
    return s;
}

inline Simulation simulate(const ScenarioConfig &c)
{
    Simulation sim;
    sim.trajectory = true_trajectory(c);
    const SimScenario s = make_sim_scenario(c, sim.trajectory);
    sim.reads = simulate_reads(s);
    sim.truth = {c.name, c.seed, sim.trajectory.front().position, s.tags};
    if (c.gps && c.trajectory.kind == TrajectoryKind::Stepped)
        sim.gps = synthesize_gps(c, sim.trajectory);
    return sim;
}

struct Estimate
{
    EstimateResult result;
    LikelihoodMap map;
    std::vector<Peak> peaks;
    std::optional<double> error_m;  // |best - true start| when ground truth is known
};

namespace detail {

inline LikelihoodMap fused_map(const std::vector<std::pair<const TagConfig *, std::vector<ReadEvent>>> &groups,
                               const MotionModel &motion, const RadioConfig &radio, const GridSpec &grid)
{
    std::vector<LikelihoodMap> maps;
    maps.reserve(groups.size());
    for (const auto &[tag, reads] : groups)
        maps.push_back(compute_likelihood_map(reads, motion, tag->position, radio, grid));
    return fuse_tag_maps(maps);
}

} // namespace detail

/// Number of peaks considered when resolving; enough that a prior can skip
/// past the mirror and a sidelobe.
inline constexpr std::size_t kPeaksConsidered = 4;

/// Full estimate pipeline against a known antenna trajectory.
inline Estimate estimate(const ScenarioConfig &c, std::span<const ReadEvent> reads, const Trajectory &trajectory,
                         const GroundTruth *truth = nullptr)
{
    const MotionModel motion(trajectory);
    const RadioConfig radio = c.radio();

    std::map<std::string, std::size_t> counts;
    std::map<std::string, std::vector<ReadEvent>> by_epc;
    for (const auto &r : reads) {
        const bool known = std::any_of(c.tags.begin(), c.tags.end(), [&](const TagConfig &t) { return t.epc == r.epc; });
        if (!known)
            throw Error(ErrorKind::Format, "read log contains EPC '" + r.epc + "' not present in the scenario");
        if (!motion.covers(r.t))
            throw Error(ErrorKind::Range,
                        "read at t = " + std::to_string(r.t) + " s is outside the trajectory span");
        ++counts[r.epc];
        by_epc[r.epc].push_back(r);
    }

    // Scenario order; tags with fewer than two reads carry no phase slope.
    std::vector<std::pair<const TagConfig *, std::vector<ReadEvent>>> groups;
    Vec3 centroid;
    for (const auto &t : c.tags) {
        auto it = by_epc.find(t.epc);
        if (it == by_epc.end() || it->second.size() < 2)
            continue;
        centroid += t.position;
        groups.emplace_back(&t, std::move(it->second));
    }
    if (groups.empty())
        throw Error(ErrorKind::InsufficientData, "no tag has at least 2 reads (" + std::to_string(reads.size()) +
                                                     " reads total)");
    centroid = (1.0 / static_cast<double>(groups.size())) * centroid;

    Estimate out;
    GridSpec grid = c.grid;
    if (c.estimator.refine) {
        for (auto &axis : grid.axes)
            if (axis.searched)
                axis.resolution = std::max(axis.resolution, c.estimator.coarse_resolution_m);
    }
    out.map = detail::fused_map(groups, motion, radio, grid);
    out.peaks = find_peaks(out.map, kPeaksConsidered, c.estimator.peak_separation_m);
    out.result = resolve_estimate(out.peaks, c.estimator.prior, motion, centroid, c.estimator.ambiguity_ratio);

    if (c.estimator.refine) {
        // Second pass at full resolution around the chosen coarse peak.
        const double fine = [&] {
            double r = 0.0;
            for (const auto &a : c.grid.axes)
                if (a.searched)
                    r = r == 0.0 ? a.resolution : std::min(r, a.resolution);
            return r;
        }();
        const GridSpec window = window_around(c.grid, out.result.best, 2.0 * c.estimator.coarse_resolution_m, fine);
        const LikelihoodMap fine_map = detail::fused_map(groups, motion, radio, window);
        const auto fine_peaks = find_peaks(fine_map, 1, 0.0);
        out.result.best = fine_peaks.front().position;
        out.result.best_likelihood = fine_peaks.front().likelihood;
    }

    out.result.per_tag_read_counts = counts;
    if (!out.result.ambiguous) {
        const auto m = misalignment_report(out.result, CoilFrame::from_heading(c.coil.center, c.coil.heading_rad));
        out.result.lateral_offset = m.lateral;
        out.result.vertical_offset = m.vertical;
    }
    if (truth)
        out.error_m = distance(out.result.best, truth->start);
    return out;
}

/// Field replay: the assumed trajectory comes from the GPS track.
inline Estimate replay(const ScenarioConfig &c, std::span<const GeoFix> fixes, std::span<const ReadEvent> reads,
                       const GroundTruth *truth = nullptr)
{
    const Trajectory traj = trajectory_from_gps(c, fixes);
    for (const auto &r : reads)
        if (!traj.covers(r.t))
            throw Error(ErrorKind::Range, "GPS track [" + std::to_string(traj.start_time()) + ", " +
                                              std::to_string(traj.end_time()) + "] s does not cover read at t = " +
                                              std::to_string(r.t) + " s");
    return estimate(c, reads, traj, truth);
}

inline json estimate_to_json(const Estimate &e)
{
    using detail::vec_json;
    const auto &r = e.result;
    json j;
    j["best"] = vec_json(r.best);
    j["best_likelihood"] = r.best_likelihood;
    j["mirror"] = r.mirror ? vec_json(*r.mirror) : json(nullptr);
    j["mirror_likelihood"] = r.mirror_likelihood ? json(*r.mirror_likelihood) : json(nullptr);
    j["ambiguous"] = r.ambiguous;
    j["lateral_offset_m"] = r.lateral_offset ? json(*r.lateral_offset) : json(nullptr);
    j["vertical_offset_m"] = r.vertical_offset ? json(*r.vertical_offset) : json(nullptr);
    j["per_tag_read_counts"] = r.per_tag_read_counts;
    j["reads_used"] = e.map.reads_used;
    json peaks = json::array();
    for (const auto &p : e.peaks)
        peaks.push_back({{"position", vec_json(p.position)}, {"likelihood", p.likelihood}});
    j["peaks"] = std::move(peaks);
    j["error_m"] = e.error_m ? json(*e.error_m) : json(nullptr);
    return j;
}

// ------------------------------------------------------------------------
// Monte Carlo sweep

struct SweepConfig
{
    ScenarioConfig base;
    std::string param;  // phase_sigma | read_rate | grid_resolution | speed
    std::vector<double> values;
    std::size_t trials = 1;
    std::uint64_t seed_base = 0;
};

struct ErrorStats
{
    std::string param;
    double value = 0.0;
    std::size_t trials = 0;
    double median = 0.0;
    double mean = 0.0;
    double p90 = 0.0;
    double max = 0.0;
};

/// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty())
        throw Error(ErrorKind::Argument, "quantile of empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ErrorStats summarize(std::string param, double value, std::vector<double> errors)
{
    std::sort(errors.begin(), errors.end());
    ErrorStats s;
    s.param = std::move(param);
    s.value = value;
    s.trials = errors.size();
    s.median = quantile_sorted(errors, 0.5);
    s.p90 = quantile_sorted(errors, 0.9);
    s.max = errors.back();
    double sum = 0.0;
    for (double e : errors)
        sum += e;
    s.mean = sum / static_cast<double>(errors.size());
    return s;
}

inline ScenarioConfig apply_sweep_value(ScenarioConfig c, const std::string &param, double value)
{
    if (param == "phase_sigma") {
        c.phase_sigma_deg = value;
    } else if (param == "read_rate") {
        c.reader.read_rate_hz = value;
    } else if (param == "grid_resolution") {
        for (auto &axis : c.grid.axes)
            if (axis.searched)
                axis.resolution = value;
    } else if (param == "speed") {
        if (c.trajectory.kind != TrajectoryKind::Stepped)
            throw Error(ErrorKind::Config, "speed sweeps need a stepped trajectory");
        if (!(value > 0.0))
            throw Error(ErrorKind::Config, "speed must be positive");
        // Same track length and dwell, longer or shorter steps.
        auto &tj = c.trajectory;
        const double step_len = tj.step.norm();
        const double length = static_cast<double>(tj.n_steps - 1) * step_len;
        const Vec3 dir = step_len > 0.0 ? (1.0 / step_len) * tj.step : Vec3{1.0, 0.0, 0.0};
        tj.step = (value * tj.dwell_s) * dir;
        tj.n_steps = static_cast<std::size_t>(std::lround(length / (value * tj.dwell_s))) + 1;
    } else {
        throw Error(ErrorKind::Config, "unknown sweep parameter '" + param + "'");
    }
    validate(c);
    return c;
}

/// One simulate + estimate trial; scenarios with a gps section are scored
/// through the GPS replay path.
inline double run_trial(const ScenarioConfig &c)
{
    const Simulation sim = simulate(c);
    const Estimate est = c.gps && !sim.gps.empty() ? replay(c, sim.gps, sim.reads, &sim.truth)
                                                   : estimate(c, sim.reads, sim.trajectory, &sim.truth);
    return *est.error_m;
}

inline std::vector<ErrorStats> run_sweep(const SweepConfig &sweep)
{
    if (sweep.trials < 1)
        throw Error(ErrorKind::Config, "sweep needs at least one trial");
    if (sweep.values.empty())
        throw Error(ErrorKind::Config, "sweep needs at least one value");
    std::vector<double> values = sweep.values;
    std::sort(values.begin(), values.end());

    std::vector<ErrorStats> rows;
    for (double v : values) {
        const ScenarioConfig cfg = apply_sweep_value(sweep.base, sweep.param, v);
        std::vector<double> errors;
        errors.reserve(sweep.trials);
        for (std::size_t trial = 0; trial < sweep.trials; ++trial) {
            ScenarioConfig tc = cfg;
            tc.seed = sweep.seed_base + trial;
            try {
                errors.push_back(run_trial(tc));
            } catch (const Error &e) {
                throw Error(e.kind(), "sweep " + sweep.param + "=" + std::to_string(v) + " trial " +
                                          std::to_string(trial) + " seed " + std::to_string(tc.seed) + ": " + e.what());
            }
        }
        rows.push_back(summarize(sweep.param, v, std::move(errors)));
    }
    return rows;
}

inline void write_sweep_csv(std::span<const ErrorStats> rows, std::ostream &out)
{
    using io::detail::fixed;
    out << "param,value,trials,median_m,mean_m,p90_m,max_m\n";
    for (const auto &r : rows)
        out << r.param << ',' << fixed(r.value, 6) << ',' << r.trials << ',' << fixed(r.median, 6) << ','
            << fixed(r.mean, 6) << ',' << fixed(r.p90, 6) << ',' << fixed(r.max, 6) << '\n';
}

} // namespace rfidalign
