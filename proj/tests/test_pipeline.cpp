// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#include "rfidalign/cli.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace rfidalign;
using namespace fixtures;
namespace fs = std::filesystem;

namespace {

class TempDir
{
  public:
    TempDir()
    {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / (std::string("rfidalign_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path &path() const { return path_; }
    fs::path operator/(const std::string &name) const { return path_ / name; }

  private:
    fs::path path_;
};

struct RunResult
{
    int code;
    std::string out;
    std::string err;
};

RunResult run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "rfidalign");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t line_count(const fs::path &p)
{
    const auto text = slurp(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

ScenarioConfig lab_config() { return load_scenario_file(scenario_dir() / "lab.json"); }

/// Lab scenario on a small window around the true start; fast enough for
/// Monte Carlo loops.
ScenarioConfig small_lab()
{
    auto c = lab_config();
    c.grid.axes = {GridAxis::search(-0.05, 0.05, 0.005), GridAxis::search(0.1, 0.3, 0.005), GridAxis::pinned(0.0)};
    return c;
}

fs::path write_scenario(const TempDir &dir, const ScenarioConfig &c, const std::string &name = "scenario.json")
{
    const auto path = dir / name;
    std::ofstream(path) << save_scenario(c);
    return path;
}

} // namespace

TEST(Cli, SimulateLab)
{
    TempDir dir;
    const auto r = run_cli({"simulate", "--scenario", (scenario_dir() / "lab.json").string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(line_count(dir / "reads.csv"), 3001u);  // header + 100/s * 30 s
    EXPECT_TRUE(fs::exists(dir / "reads.truth.json"));
    EXPECT_FALSE(fs::exists(dir / "gps.csv"));
    const auto truth = truth_from_json(json::parse(slurp(dir / "reads.truth.json")));
    EXPECT_DOUBLE_EQ(truth.start.y, 0.2);
}

TEST(Cli, SeedChangesPhasesNotCount)
{
    TempDir dir;
    const auto lab = (scenario_dir() / "lab.json").string();
    ASSERT_EQ(run_cli({"simulate", "--scenario", lab, "--log", (dir / "a.csv").string(), "--out", dir.path().string()}).code, 0);
    ASSERT_EQ(run_cli({"simulate", "--scenario", lab, "--seed", "7", "--log", (dir / "b.csv").string(), "--out",
                       dir.path().string()})
                  .code,
              0);
    EXPECT_EQ(line_count(dir / "a.csv"), line_count(dir / "b.csv"));
    EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(Cli, InvalidInputsExitNonzero)
{
    TempDir dir;
    std::ofstream(dir / "bad.json") << R"({"tags": [], "foo": 2})";
    auto r = run_cli({"simulate", "--scenario", (dir / "bad.json").string(), "--out", dir.path().string()});
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("foo"), std::string::npos);

    r = run_cli({"simulate", "--scenario", (dir / "missing.json").string(), "--out", dir.path().string()});
    EXPECT_NE(r.code, 0);
    r = run_cli({"frobnicate"});
    EXPECT_NE(r.code, 0);
    r = run_cli({"estimate", "--scenario", (scenario_dir() / "lab.json").string()});
    EXPECT_EQ(r.code, cli::kConfigError);  // --log missing
}

TEST(Cli, EstimateNoiseFree)
{
    TempDir dir;
    auto c = lab_config();
    c.phase_sigma_deg = 0.0;
    const auto scenario = write_scenario(dir, c).string();
    ASSERT_EQ(run_cli({"simulate", "--scenario", scenario, "--out", dir.path().string()}).code, 0);
    const auto r = run_cli({"estimate", "--scenario", scenario, "--log", (dir / "reads.csv").string(), "--out",
                            dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto result = json::parse(slurp(dir / "result.json"));
    EXPECT_LE(result["error_m"].get<double>(), 0.005);
    EXPECT_FALSE(result["ambiguous"].get<bool>());
    EXPECT_NEAR(result["lateral_offset_m"].get<double>(), -0.05, 0.005);
    EXPECT_EQ(line_count(dir / "map.csv"), 1 + c.grid.cell_count());
}

TEST(Cli, AmbiguousWithoutPriorExitsFour)
{
    TempDir dir;
    auto c = lab_config();
    c.phase_sigma_deg = 0.0;
    c.grid.axes[0] = GridAxis::search(-0.02, 0.02, 0.005);
    const auto scenario = write_scenario(dir, c).string();
    ASSERT_EQ(run_cli({"simulate", "--scenario", scenario, "--out", dir.path().string()}).code, 0);
    const auto r = run_cli({"estimate", "--scenario", scenario, "--log", (dir / "reads.csv").string(), "--out",
                            dir.path().string(), "--prior", "none", "--map-format", "pgm"});
    EXPECT_EQ(r.code, cli::kAmbiguous);
    EXPECT_NE(r.out.find("ambiguous"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "map.pgm"));
    const auto result = json::parse(slurp(dir / "result.json"));
    EXPECT_TRUE(result["ambiguous"].get<bool>());
    EXPECT_TRUE(result["lateral_offset_m"].is_null());
}

TEST(Cli, OneReadIsInsufficient)
{
    TempDir dir;
    std::ofstream(dir / "one.csv") << "epc,t_s,phase_deg,rssi_dbm,channel_mhz\nE2003412B802011526,0.0,10.0,-50,910\n";
    const auto r = run_cli({"estimate", "--scenario", (scenario_dir() / "lab.json").string(), "--log",
                            (dir / "one.csv").string(), "--out", dir.path().string()});
    EXPECT_EQ(r.code, cli::kDataError);
    EXPECT_NE(r.err.find("at least 2 reads"), std::string::npos) << r.err;

    try {
        const std::vector<ReadEvent> one{{"E2003412B802011526", 0.0, FoldedPhaseDeg(10.0), -50, 910e6}};
        estimate(lab_config(), one, true_trajectory(lab_config()));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(Cli, UnknownEpcRejected)
{
    const std::vector<ReadEvent> reads{{"FFFF", 0.0, FoldedPhaseDeg(10.0), -50, 910e6},
                                       {"FFFF", 0.1, FoldedPhaseDeg(11.0), -50, 910e6}};
    EXPECT_THROW(estimate(small_lab(), reads, true_trajectory(small_lab())), Error);
}

TEST(Replay, FieldScenarioWritesGpsAndEstimates)
{
    TempDir dir;
    const auto field = (scenario_dir() / "field.json").string();
    ASSERT_EQ(run_cli({"simulate", "--scenario", field, "--out", dir.path().string()}).code, 0);
    ASSERT_TRUE(fs::exists(dir / "gps.csv"));
    EXPECT_EQ(line_count(dir / "gps.csv"), 1u + 51u);  // 10 Hz over 5 s, both ends
    const auto r = run_cli({"replay", "--scenario", field, "--gps", (dir / "gps.csv").string(), "--log",
                            (dir / "reads.csv").string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto result = json::parse(slurp(dir / "result.json"));
    EXPECT_LE(result["error_m"].get<double>(), 0.10);
}

TEST(Replay, GpsNotCoveringReadsIsRangeError)
{
    auto c = load_scenario_file(scenario_dir() / "field.json");
    const auto sim = simulate(c);
    std::vector<GeoFix> half(sim.gps.begin(), sim.gps.begin() + static_cast<long>(sim.gps.size() / 2));
    try {
        replay(c, half, sim.reads, &sim.truth);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Range);
    }

    TempDir dir;
    {
        auto f = io::open_output((dir / "gps.csv").string());
        io::write_gps_log(half, f);
        auto g = io::open_output((dir / "reads.csv").string());
        io::write_read_log(sim.reads, g);
    }
    const auto r = run_cli({"replay", "--scenario", (scenario_dir() / "field.json").string(), "--gps",
                            (dir / "gps.csv").string(), "--log", (dir / "reads.csv").string(), "--out",
                            dir.path().string()});
    EXPECT_EQ(r.code, cli::kDataError);
}

TEST(Replay, PerfectGpsZeroLeverArmMatchesLabCase)
{
    auto c = small_lab();
    c.phase_sigma_deg = 0.0;
    c.gps = GpsConfig{};
    c.gps->position_sigma_m = 0.0;
    c.gps->rate_hz = 10.0;  // one fix per 0.1 s dwell step
    const auto sim = simulate(c);
    ASSERT_FALSE(sim.gps.empty());
    const auto est = replay(c, sim.gps, sim.reads, &sim.truth);
    EXPECT_LE(*est.error_m, 0.005 * std::sqrt(2.0));
}

TEST(Replay, LeverArmIsUndone)
{
    auto c = small_lab();
    c.phase_sigma_deg = 0.0;
    c.gps = GpsConfig{};
    c.gps->position_sigma_m = 0.0;
    c.gps->lever_arm = {{-1.2, 0.3, -1.0}, 0.0};
    const auto sim = simulate(c);
    const auto track = trajectory_from_gps(c, sim.gps);
    for (const auto &pose : track.poses())
        EXPECT_LE(distance(pose.position, position_at(sim.trajectory, pose.t)), 1e-4);
}

TEST(Pipeline, EstimateNeverFailsOnBundledScenarios)
{
    for (const char *name : {"lab.json", "field.json", "two_tag_3d.json"}) {
        const auto c = load_scenario_file(scenario_dir() / name);
        const auto sim = simulate(c);
        Estimate est;
        ASSERT_NO_THROW(est = estimate(c, sim.reads, sim.trajectory, &sim.truth)) << name;
        EXPECT_LE(*est.error_m, 0.10) << name;
    }
}

TEST(Pipeline, RefineMatchesFullGrid)
{
    auto c = lab_config();
    c.phase_sigma_deg = 0.0;
    const auto sim = simulate(c);
    c.estimator.refine = true;
    const auto est = estimate(c, sim.reads, sim.trajectory, &sim.truth);
    EXPECT_LE(*est.error_m, 0.005);
}

TEST(Pipeline, EstimateDeterministic)
{
    const auto c = small_lab();
    const auto sim = simulate(c);
    const auto a = estimate_to_json(estimate(c, sim.reads, sim.trajectory, &sim.truth)).dump();
    const auto b = estimate_to_json(estimate(c, sim.reads, sim.trajectory, &sim.truth)).dump();
    EXPECT_EQ(a, b);
}

TEST(Pipeline, RandomOffsetsFromSeed)
{
    auto c = lab_config();
    const auto a = resolve_tags(c);
    c.seed = 1;
    const auto b = resolve_tags(c);
    EXPECT_NE(a[0].offsets.combined_offset, b[0].offsets.combined_offset);
    c.tags[0].offset_rad = 0.5;
    EXPECT_DOUBLE_EQ(resolve_tags(c)[0].offsets.combined_offset, 0.5);
}

TEST(Sweep, NoiseFreeMedianWithinHalfCellDiagonal)
{
    SweepConfig s;
    s.base = small_lab();
    s.param = "phase_sigma";
    s.values = {0.0};
    s.trials = 5;
    const auto rows = run_sweep(s);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_LE(rows[0].median, 0.5 * std::sqrt(2.0) * 0.005);
}

TEST(Sweep, MoreNoiseNoBetter)
{
    SweepConfig s;
    s.base = small_lab();
    s.param = "phase_sigma";
    s.values = {20.0, 0.0};
    s.trials = 200;
    const auto rows = run_sweep(s);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].value, 0.0);  // sorted
    EXPECT_GE(rows[1].median, rows[0].median);
    for (const auto &r : rows) {
        EXPECT_LE(r.median, r.p90);
        EXPECT_LE(r.p90, r.max);
        EXPECT_GE(r.median, 0.0);
        EXPECT_EQ(r.trials, 200u);
    }
}

TEST(Sweep, OtherParameters)
{
    for (const char *param : {"read_rate", "grid_resolution", "speed"}) {
        SweepConfig s;
        s.base = small_lab();
        s.param = param;
        s.values = {std::string(param) == "read_rate" ? 50.0 : std::string(param) == "speed" ? 0.1 : 0.01};
        s.trials = 2;
        const auto rows = run_sweep(s);
        ASSERT_EQ(rows.size(), 1u) << param;
        EXPECT_LE(rows[0].median, rows[0].p90);
        EXPECT_LE(rows[0].p90, rows[0].max);
    }
    SweepConfig bad;
    bad.base = small_lab();
    bad.param = "colour";
    bad.values = {1.0};
    EXPECT_THROW(run_sweep(bad), Error);
    bad.param = "phase_sigma";
    bad.trials = 0;
    EXPECT_THROW(run_sweep(bad), Error);
}

TEST(Sweep, SpeedKeepsTrackLength)
{
    const auto c = apply_sweep_value(lab_config(), "speed", 0.1);
    EXPECT_NEAR(c.trajectory.step.x, 0.01, 1e-15);
    EXPECT_EQ(c.trajectory.n_steps, 151u);
}

TEST(Sweep, CliByteIdentical)
{
    TempDir dir;
    auto c = small_lab();
    const auto scenario = write_scenario(dir, c).string();
    const auto a = dir / "a";
    const auto b = dir / "b";
    for (const auto &out : {a, b})
        ASSERT_EQ(run_cli({"sweep", "--scenario", scenario, "--param", "phase_sigma", "--values", "0,10", "--trials",
                           "1", "--seed", "3", "--out", out.string()})
                      .code,
                  0);
    const auto text = slurp(a / "sweep.csv");
    EXPECT_EQ(text, slurp(b / "sweep.csv"));
    EXPECT_EQ(text.substr(0, text.find('\n')), "param,value,trials,median_m,mean_m,p90_m,max_m");
    EXPECT_EQ(line_count(a / "sweep.csv"), 3u);
}

TEST(Stats, QuantilesAndOrdering)
{
    const auto s = summarize("p", 1.0, {0.3, 0.1, 0.2, 0.5, 0.4});
    EXPECT_DOUBLE_EQ(s.median, 0.3);
    EXPECT_DOUBLE_EQ(s.max, 0.5);
    EXPECT_NEAR(s.p90, 0.46, 1e-12);
    EXPECT_NEAR(s.mean, 0.3, 1e-12);
    const auto one = summarize("p", 1.0, {0.7});
    EXPECT_EQ(one.median, 0.7);
    EXPECT_EQ(one.p90, 0.7);
    EXPECT_THROW(summarize("p", 1.0, {}), Error);
}
