// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/log_io.hpp"
#include "rfidalign/pipeline.hpp"
#include "rfidalign/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

// Command-line front end:
//
//   rfidalign simulate --scenario lab.json --out run/
//   rfidalign estimate --scenario lab.json --log run/reads.csv --out run/
//   rfidalign replay   --scenario field.json --gps run/gps.csv --log run/reads.csv --out run/
//   rfidalign sweep    --scenario lab.json --param phase_sigma --values 0,10,20 --trials 20 --out run/
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 ambiguous estimate without a side prior.

namespace rfidalign::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kDataError = 3,
    kAmbiguous = 4,
};

inline int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Argument:
        return kConfigError;
    case ErrorKind::Ambiguity:
        return kAmbiguous;
    default:
        return kDataError;
    }
}

/// Ground-truth sidecar path for a read log: reads.csv -> reads.truth.json.
inline std::filesystem::path sidecar_path(const std::filesystem::path &log)
{
    auto p = log;
    p.replace_extension(".truth.json");
    return p;
}

struct Options
{
    std::string scenario;
    std::string log;
    std::string gps;
    std::string out = ".";
    std::string map_format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<double> grid_res;
    std::optional<std::string> prior;
    bool lenient = false;
    // sweep
    std::string param = "phase_sigma";
    std::vector<double> values;
    std::size_t trials = 10;
};

namespace detail {

inline void write_text(const std::filesystem::path &path, const std::string &text)
{
    auto out = io::open_output(path.string());
    out << text;
    if (!out)
        throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

inline ScenarioConfig load_with_overrides(const Options &o)
{
    ScenarioConfig c = load_scenario_file(o.scenario);
    if (o.seed)
        c.seed = *o.seed;
    if (o.grid_res) {
        for (auto &axis : c.grid.axes)
            if (axis.searched)
                axis.resolution = *o.grid_res;
    }
    if (o.prior)
        c.estimator.prior = parse_side_prior(*o.prior);
    validate(c);
    return c;
}

inline std::vector<ReadEvent> load_reads(const Options &o, std::ostream &err)
{
    if (o.log.empty())
        throw Error(ErrorKind::Argument, "--log is required");
    auto in = io::open_input(o.log);
    auto parsed = io::parse_read_log(in, {o.lenient});
    if (parsed.skipped > 0)
        err << "skipped " << parsed.skipped << " malformed read-log rows\n";
    return std::move(parsed.items);
}

inline std::optional<GroundTruth> load_truth(const std::string &log)
{
    const auto path = sidecar_path(log);
    if (!std::filesystem::exists(path))
        return std::nullopt;
    auto in = io::open_input(path.string());
    try {
        return truth_from_json(json::parse(in));
    } catch (const json::exception &e) {
        throw Error(ErrorKind::Format, "ground-truth sidecar '" + path.string() + "': " + e.what());
    }
}

inline void write_map(const Options &o, const LikelihoodMap &map)
{
    const auto format = io::parse_map_format(o.map_format);
    const std::string ext = format == io::MapFormat::Csv ? ".csv" : ".pgm";
    const std::filesystem::path dir(o.out);
    const std::size_t slices = io::slice_count(map);
    for (std::size_t s = 0; s < slices; ++s) {
        const std::string name = slices == 1 ? "map" + ext : fmt::format("map_slice{:03d}{}", s, ext);
        auto out = io::open_output((dir / name).string());
        io::export_map(map, format, out, s);
    }
}

inline int finish_estimate(const Options &o, const Estimate &est, std::ostream &out)
{
    write_map(o, est.map);
    write_text(std::filesystem::path(o.out) / "result.json", estimate_to_json(est).dump(2) + "\n");
    const auto &r = est.result;
    out << fmt::format("best ({:.4f}, {:.4f}, {:.4f}) m  likelihood {:.4f}\n", r.best.x, r.best.y, r.best.z,
                       r.best_likelihood);
    if (r.lateral_offset)
        out << fmt::format("lateral {:.4f} m  vertical {:.4f} m\n", *r.lateral_offset, *r.vertical_offset);
    if (est.error_m)
        out << fmt::format("error vs ground truth {:.4f} m\n", *est.error_m);
    if (r.ambiguous) {
        out << fmt::format("ambiguous: mirror peak at ({:.4f}, {:.4f}, {:.4f}) m; pass --prior left|right\n",
                           r.mirror->x, r.mirror->y, r.mirror->z);
        return kAmbiguous;
    }
    return kOk;
}

} // namespace detail

inline int cmd_simulate(const Options &o, std::ostream &out, std::ostream & /*err*/)
{
    const ScenarioConfig c = detail::load_with_overrides(o);
    const Simulation sim = simulate(c);
    std::filesystem::create_directories(o.out);
    const std::filesystem::path log = o.log.empty() ? std::filesystem::path(o.out) / "reads.csv" : std::filesystem::path(o.log);
    {
        auto f = io::open_output(log.string());
        io::write_read_log(sim.reads, f);
    }
    detail::write_text(sidecar_path(log), truth_to_json(sim.truth).dump(2) + "\n");
    if (!sim.gps.empty()) {
        auto f = io::open_output((std::filesystem::path(o.out) / "gps.csv").string());
        io::write_gps_log(sim.gps, f);
    }
    out << "wrote " << sim.reads.size() << " reads to " << log.string() << "\n";
    return kOk;
}

inline int cmd_estimate(const Options &o, std::ostream &out, std::ostream &err)
{
    const ScenarioConfig c = detail::load_with_overrides(o);
    const auto reads = detail::load_reads(o, err);
    const auto truth = detail::load_truth(o.log);
    std::filesystem::create_directories(o.out);
    const Estimate est = estimate(c, reads, true_trajectory(c), truth ? &*truth : nullptr);
    return detail::finish_estimate(o, est, out);
}

inline int cmd_replay(const Options &o, std::ostream &out, std::ostream &err)
{
    const ScenarioConfig c = detail::load_with_overrides(o);
    if (o.gps.empty())
        throw Error(ErrorKind::Argument, "--gps is required");
    auto gps_in = io::open_input(o.gps);
    const auto gps = io::parse_gps_log(gps_in, {o.lenient});
    if (gps.skipped > 0)
        err << "skipped " << gps.skipped << " malformed GPS rows\n";
    const auto reads = detail::load_reads(o, err);
    const auto truth = detail::load_truth(o.log);
    std::filesystem::create_directories(o.out);
    const Estimate est = replay(c, gps.items, reads, truth ? &*truth : nullptr);
    return detail::finish_estimate(o, est, out);
}

inline int cmd_sweep(const Options &o, std::ostream &out, std::ostream & /*err*/)
{
    SweepConfig sweep;
    sweep.base = detail::load_with_overrides(o);
    sweep.param = o.param;
    sweep.values = o.values;
    sweep.trials = o.trials;
    sweep.seed_base = o.seed.value_or(0);
    const auto rows = run_sweep(sweep);
    std::filesystem::create_directories(o.out);
    const auto path = std::filesystem::path(o.out) / "sweep.csv";
    auto f = io::open_output(path.string());
    write_sweep_csv(rows, f);
    out << "wrote " << rows.size() << " rows to " << path.string() << "\n";
    return kOk;
}

inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"RFID phase-based coil alignment: simulate reader logs and estimate antenna start position"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--seed", o.seed, "Override the scenario seed (sweep: first trial seed)");
        sub->add_option("--grid-res", o.grid_res, "Override the grid resolution of every searched axis (m)");
        sub->add_option("--prior", o.prior, "Side prior: left, right or none");
    };
    auto add_estimate_flags = [&](CLI::App *sub) {
        sub->add_option("--log", o.log, "Read log CSV")->required();
        sub->add_option("--map-format", o.map_format, "Likelihood map export format: csv or pgm");
        sub->add_flag("--lenient", o.lenient, "Skip and count malformed rows instead of failing");
    };

    auto *simulate_cmd = app.add_subcommand("simulate", "Generate a read log and ground-truth sidecar");
    add_common(simulate_cmd);
    simulate_cmd->add_option("--log", o.log, "Read log output path (default <out>/reads.csv)");

    auto *estimate_cmd = app.add_subcommand("estimate", "Estimate the start position from a read log");
    add_common(estimate_cmd);
    add_estimate_flags(estimate_cmd);

    auto *replay_cmd = app.add_subcommand("replay", "Estimate using a GPS track as the antenna trajectory");
    add_common(replay_cmd);
    add_estimate_flags(replay_cmd);
    replay_cmd->add_option("--gps", o.gps, "GPS CSV track")->required();

    auto *sweep_cmd = app.add_subcommand("sweep", "Monte Carlo error statistics over a parameter");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--param", o.param, "phase_sigma, read_rate, grid_resolution or speed");
    sweep_cmd->add_option("--values", o.values, "Comma-separated parameter values")->delimiter(',')->required();
    sweep_cmd->add_option("--trials", o.trials, "Trials per value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*simulate_cmd)
            return cmd_simulate(o, out, err);
        if (*estimate_cmd)
            return cmd_estimate(o, out, err);
        if (*replay_cmd)
            return cmd_replay(o, out, err);
        return cmd_sweep(o, out, err);
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error &e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
}

} // namespace rfidalign::cli
