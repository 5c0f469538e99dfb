// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/geometry.hpp"
#include "rfidalign/grid.hpp"
#include "rfidalign/mle_estimator.hpp"
#include "rfidalign/phase_model.hpp"
#include "rfidalign/read_simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

// Scenario files: one JSON document describing radio, tags, motion, noise,
// grid and priors. Unknown keys are rejected; omitted keys take the
// defaults below.

namespace rfidalign {

using json = nlohmann::json;

struct TagConfig
{
    std::string epc;
    Vec3 position;
    std::optional<double> offset_rad;  // empty: drawn uniformly in [0, 2*pi) from the seed
};

enum class TrajectoryKind { Stepped, GpsFile };

struct TrajectoryConfig
{
    TrajectoryKind kind = TrajectoryKind::Stepped;
    // stepped
    Vec3 start;
    Vec3 step{0.005, 0.0, 0.0};
    double dwell_s = 0.1;
    std::size_t n_steps = 301;
    // gps-file, relative to the scenario file
    std::string path;
};

struct ReaderConfig
{
    double read_rate_hz = 100.0;
    double max_range_m = 5.0;
    double miss_probability = 0.0;
    RssiModel rssi;
};

/// GPS receiver model: used to synthesize a noisy track for simulated
/// field runs and to convert recorded tracks back to the local frame.
struct GpsConfig
{
    GeoFix origin{0.0, 41.7452, -111.8097, 1382.0};
    LeverArm lever_arm;  // GPS antenna -> RFID antenna, body frame
    bool heading_from_track = false;
    double rate_hz = 10.0;
    double position_sigma_m = 0.02;
    double correlation_time_s = 30.0;
};

struct EstimatorConfig
{
    SidePrior prior = SidePrior::None;
    double peak_separation_m = 0.05;
    double ambiguity_ratio = kAmbiguityRatio;
    bool refine = false;  // coarse-to-fine search
    double coarse_resolution_m = 0.025;
};

struct CoilConfig
{
    Vec3 center;
    double heading_rad = 0.0;
};

struct ScenarioConfig
{
    std::string name = "scenario";
    std::uint64_t seed = 0;
    double frequency_hz = 910e6;
    double tx_power_dbm = 25.0;
    std::vector<double> hop_channels_hz;
    std::vector<TagConfig> tags;
    TrajectoryConfig trajectory;
    ReaderConfig reader;
    double phase_sigma_deg = 10.0;
    MultipathModel multipath;
    std::optional<GpsConfig> gps;
    GridSpec grid = default_grid();
    EstimatorConfig estimator;
    CoilConfig coil;

    std::filesystem::path base_dir;  // directory of the scenario file; not serialized

    RadioConfig radio() const { return RadioConfig(frequency_hz, tx_power_dbm); }

    static GridSpec default_grid()
    {
        GridSpec g;
        g.axes = {GridAxis::search(-0.75, 0.75, 0.0025), GridAxis::search(0.05, 0.65, 0.0025), GridAxis::pinned(0.0)};
        return g;
    }
};

inline const char *to_string(SidePrior p)
{
    switch (p) {
    case SidePrior::LeftOfTag: return "left";
    case SidePrior::RightOfTag: return "right";
    case SidePrior::None: return "none";
    }
    return "none";
}

inline SidePrior parse_side_prior(std::string_view s)
{
    if (s == "left")
        return SidePrior::LeftOfTag;
    if (s == "right")
        return SidePrior::RightOfTag;
    if (s == "none")
        return SidePrior::None;
    throw Error(ErrorKind::Config, "side prior must be left, right or none, got '" + std::string(s) + "'");
}

namespace detail {

/// Reads keys from one JSON object, tracking its path for error messages.
class ObjectReader
{
  public:
    ObjectReader(const json &obj, std::string path, std::initializer_list<std::string_view> allowed)
        : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object())
            fail(path_, "expected an object");
        for (const auto &item : obj_.items()) {
            bool known = false;
            for (auto a : allowed)
                known = known || item.key() == a;
            if (!known)
                fail(child(item.key()), "unknown key \"" + item.key() + "\"");
        }
    }

    [[noreturn]] static void fail(const std::string &path, const std::string &what)
    {
        throw Error(ErrorKind::Config, (path.empty() ? std::string("/") : path) + ": " + what);
    }

    std::string child(std::string_view key) const { return path_ + "/" + std::string(key); }
    bool has(std::string_view key) const { return obj_.contains(key); }
    const json &at(std::string_view key) const
    {
        if (!has(key))
            fail(child(key), "required key is missing");
        return obj_.at(std::string(key));
    }

    double number(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }
    double number(std::string_view key) const
    {
        const auto &v = at(key);
        if (!v.is_number())
            fail(child(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d))
            fail(child(key), "expected a finite number");
        return d;
    }

    std::uint64_t unsigned_integer(std::string_view key, std::uint64_t fallback) const
    {
        if (!has(key))
            return fallback;
        const auto &v = at(key);
        if (!v.is_number_unsigned())
            fail(child(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(std::string_view key, bool fallback) const
    {
        if (!has(key))
            return fallback;
        if (!at(key).is_boolean())
            fail(child(key), "expected true or false");
        return at(key).get<bool>();
    }

    std::string string(std::string_view key, const std::string &fallback) const { return has(key) ? string(key) : fallback; }
    std::string string(std::string_view key) const
    {
        if (!at(key).is_string())
            fail(child(key), "expected a string");
        return at(key).get<std::string>();
    }

    Vec3 vec3(std::string_view key, const Vec3 &fallback) const { return has(key) ? vec3(key) : fallback; }
    Vec3 vec3(std::string_view key) const
    {
        const auto &v = at(key);
        if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
            fail(child(key), "expected [x, y, z]");
        return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    }

  private:
    const json &obj_;
    std::string path_;
};

inline json vec_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

inline GridAxis parse_axis(const json &j, const std::string &path)
{
    if (j.is_object() && j.contains("fixed")) {
        ObjectReader r(j, path, {"fixed"});
        return GridAxis::pinned(r.number("fixed"));
    }
    ObjectReader r(j, path, {"min", "max", "resolution"});
    return GridAxis::search(r.number("min"), r.number("max"), r.number("resolution"));
}

inline json axis_json(const GridAxis &a)
{
    if (!a.searched)
        return {{"fixed", a.fixed}};
    return {{"min", a.min}, {"max", a.max}, {"resolution", a.resolution}};
}

} // namespace detail

inline void validate(const ScenarioConfig &c)
{
    using detail::ObjectReader;
    if (!(c.frequency_hz > 0.0))
        ObjectReader::fail("/radio/frequency_hz", "must be positive");
    for (double f : c.hop_channels_hz)
        if (!(f > 0.0))
            ObjectReader::fail("/radio/hop_channels_hz", "channels must be positive");
    for (std::size_t i = 0; i < c.tags.size(); ++i) {
        const auto &t = c.tags[i];
        const std::string path = "/tags/" + std::to_string(i);
        if (t.epc.empty() || t.epc.size() > 24)
            ObjectReader::fail(path + "/epc", "must have 1..24 characters");
        for (std::size_t j = 0; j < i; ++j)
            if (c.tags[j].epc == t.epc)
                ObjectReader::fail(path + "/epc", "duplicate EPC " + t.epc);
        if (!t.position.finite())
            ObjectReader::fail(path + "/position", "must be finite");
    }
    if (c.trajectory.kind == TrajectoryKind::Stepped) {
        if (c.trajectory.n_steps < 1)
            ObjectReader::fail("/trajectory/n_steps", "must be >= 1");
        if (!(c.trajectory.dwell_s > 0.0))
            ObjectReader::fail("/trajectory/dwell_s", "must be positive");
    } else if (c.trajectory.path.empty()) {
        ObjectReader::fail("/trajectory/path", "gps-file trajectory needs a path");
    }
    if (!(c.reader.read_rate_hz > 0.0))
        ObjectReader::fail("/reader/read_rate_hz", "must be positive");
    if (!(c.reader.max_range_m > 0.0))
        ObjectReader::fail("/reader/max_range_m", "must be positive");
    if (!(c.reader.miss_probability >= 0.0 && c.reader.miss_probability < 1.0))
        ObjectReader::fail("/reader/miss_probability", "must lie in [0, 1)");
    if (!(c.reader.rssi.d0_m > 0.0))
        ObjectReader::fail("/reader/rssi_d0_m", "must be positive");
    if (!(c.phase_sigma_deg >= 0.0))
        ObjectReader::fail("/noise/phase_sigma_deg", "must be non-negative");
    if (c.gps) {
        try {
            validate(c.gps->origin);
            validate(c.gps->lever_arm);
        } catch (const Error &e) {
            ObjectReader::fail("/gps", e.what());
        }
        if (!(c.gps->rate_hz > 0.0))
            ObjectReader::fail("/gps/rate_hz", "must be positive");
        if (!(c.gps->position_sigma_m >= 0.0))
            ObjectReader::fail("/gps/position_sigma_m", "must be non-negative");
        if (!(c.gps->correlation_time_s >= 0.0))
            ObjectReader::fail("/gps/correlation_time_s", "must be non-negative");
    }
    try {
        validate(c.grid);
    } catch (const Error &e) {
        ObjectReader::fail("/grid", e.what());
    }
    if (!(c.estimator.peak_separation_m >= 0.0))
        ObjectReader::fail("/estimator/peak_separation_m", "must be non-negative");
    if (!(c.estimator.ambiguity_ratio > 0.0 && c.estimator.ambiguity_ratio <= 1.0))
        ObjectReader::fail("/estimator/ambiguity_ratio", "must lie in (0, 1]");
    if (!(c.estimator.coarse_resolution_m > 0.0))
        ObjectReader::fail("/estimator/coarse_resolution_m", "must be positive");
}

inline ScenarioConfig scenario_from_json(const json &root)
{
    using detail::ObjectReader;
    ScenarioConfig c;
    ObjectReader top(root, "", {"name", "seed", "radio", "tags", "trajectory", "reader", "noise", "multipath", "gps",
                                "grid", "estimator", "coil"});
    c.name = top.string("name", c.name);
    c.seed = top.unsigned_integer("seed", c.seed);

    if (top.has("radio")) {
        ObjectReader r(top.at("radio"), "/radio", {"frequency_hz", "tx_power_dbm", "hop_channels_hz"});
        c.frequency_hz = r.number("frequency_hz", c.frequency_hz);
        c.tx_power_dbm = r.number("tx_power_dbm", c.tx_power_dbm);
        if (r.has("hop_channels_hz")) {
            const auto &h = r.at("hop_channels_hz");
            if (!h.is_array())
                ObjectReader::fail("/radio/hop_channels_hz", "expected an array of numbers");
            for (const auto &f : h) {
                if (!f.is_number())
                    ObjectReader::fail("/radio/hop_channels_hz", "expected an array of numbers");
                c.hop_channels_hz.push_back(f.get<double>());
            }
        }
    }

    const auto &tags = top.at("tags");
    if (!tags.is_array())
        ObjectReader::fail("/tags", "expected an array");
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const std::string path = "/tags/" + std::to_string(i);
        ObjectReader t(tags[i], path, {"epc", "position", "offset_rad"});
        TagConfig tag;
        tag.epc = t.string("epc");
        tag.position = t.vec3("position");
        if (t.has("offset_rad")) {
            const auto &o = t.at("offset_rad");
            if (o.is_string() && o.get<std::string>() == "random")
                tag.offset_rad.reset();
            else
                tag.offset_rad = t.number("offset_rad");
        }
        c.tags.push_back(std::move(tag));
    }

    {
        const auto &tj = top.at("trajectory");
        const std::string kind = tj.is_object() && tj.contains("kind") && tj["kind"].is_string()
                                     ? tj["kind"].get<std::string>()
                                     : std::string();
        if (kind == "stepped") {
            ObjectReader r(tj, "/trajectory", {"kind", "start", "step", "dwell_s", "n_steps"});
            c.trajectory.kind = TrajectoryKind::Stepped;
            c.trajectory.start = r.vec3("start");
            c.trajectory.step = r.vec3("step");
            c.trajectory.dwell_s = r.number("dwell_s");
            const auto n = r.unsigned_integer("n_steps", 0);
            c.trajectory.n_steps = static_cast<std::size_t>(n);
        } else if (kind == "gps-file") {
            ObjectReader r(tj, "/trajectory", {"kind", "path"});
            c.trajectory.kind = TrajectoryKind::GpsFile;
            c.trajectory.path = r.string("path");
        } else {
            ObjectReader::fail("/trajectory/kind", "must be \"stepped\" or \"gps-file\"");
        }
    }

    if (top.has("reader")) {
        ObjectReader r(top.at("reader"), "/reader",
                       {"read_rate_hz", "max_range_m", "miss_probability", "rssi_d0_m", "rssi_p0_dbm"});
        c.reader.read_rate_hz = r.number("read_rate_hz", c.reader.read_rate_hz);
        c.reader.max_range_m = r.number("max_range_m", c.reader.max_range_m);
        c.reader.miss_probability = r.number("miss_probability", c.reader.miss_probability);
        c.reader.rssi.d0_m = r.number("rssi_d0_m", c.reader.rssi.d0_m);
        c.reader.rssi.p0_dbm = r.number("rssi_p0_dbm", c.reader.rssi.p0_dbm);
    }
    if (top.has("noise")) {
        ObjectReader r(top.at("noise"), "/noise", {"phase_sigma_deg"});
        c.phase_sigma_deg = r.number("phase_sigma_deg", c.phase_sigma_deg);
    }
    if (top.has("multipath")) {
        ObjectReader r(top.at("multipath"), "/multipath", {"enabled", "reflection_coefficient"});
        c.multipath.enabled = r.boolean("enabled", c.multipath.enabled);
        c.multipath.reflection_coefficient = r.number("reflection_coefficient", c.multipath.reflection_coefficient);
    }
    if (top.has("gps")) {
        ObjectReader r(top.at("gps"), "/gps", {"origin", "lever_arm", "heading_from_track", "rate_hz", "position_sigma_m",
                                                  "correlation_time_s"});
        GpsConfig g;
        if (r.has("origin")) {
            ObjectReader o(r.at("origin"), "/gps/origin", {"lat", "lon", "alt"});
            g.origin.lat = o.number("lat");
            g.origin.lon = o.number("lon");
            g.origin.alt = o.number("alt", 0.0);
        }
        if (r.has("lever_arm")) {
            ObjectReader a(r.at("lever_arm"), "/gps/lever_arm", {"offset", "heading_rad"});
            g.lever_arm.offset = a.vec3("offset", {});
            g.lever_arm.heading = a.number("heading_rad", 0.0);
        }
        g.heading_from_track = r.boolean("heading_from_track", g.heading_from_track);
        g.rate_hz = r.number("rate_hz", g.rate_hz);
        g.position_sigma_m = r.number("position_sigma_m", g.position_sigma_m);
        g.correlation_time_s = r.number("correlation_time_s", g.correlation_time_s);
        c.gps = g;
    }
    if (top.has("grid")) {
        ObjectReader r(top.at("grid"), "/grid", {"x", "y", "z", "max_cells"});
        c.grid.axes[0] = detail::parse_axis(r.at("x"), "/grid/x");
        c.grid.axes[1] = detail::parse_axis(r.at("y"), "/grid/y");
        c.grid.axes[2] = detail::parse_axis(r.at("z"), "/grid/z");
        c.grid.max_cells = static_cast<std::size_t>(r.unsigned_integer("max_cells", kDefaultCellBudget));
    }
    if (top.has("estimator")) {
        ObjectReader r(top.at("estimator"), "/estimator",
                       {"prior", "peak_separation_m", "ambiguity_ratio", "refine", "coarse_resolution_m"});
        if (r.has("prior")) {
            try {
                c.estimator.prior = parse_side_prior(r.string("prior"));
            } catch (const Error &) {
                ObjectReader::fail("/estimator/prior", "must be \"left\", \"right\" or \"none\"");
            }
        }
        c.estimator.peak_separation_m = r.number("peak_separation_m", c.estimator.peak_separation_m);
        c.estimator.ambiguity_ratio = r.number("ambiguity_ratio", c.estimator.ambiguity_ratio);
        c.estimator.refine = r.boolean("refine", c.estimator.refine);
        c.estimator.coarse_resolution_m = r.number("coarse_resolution_m", c.estimator.coarse_resolution_m);
    }
    if (top.has("coil")) {
        ObjectReader r(top.at("coil"), "/coil", {"center", "heading_rad"});
        c.coil.center = r.vec3("center", {});
        c.coil.heading_rad = r.number("heading_rad", 0.0);
    }
    validate(c);
    return c;
}

/// Fully explicit form: every default is written out.
inline json scenario_to_json(const ScenarioConfig &c)
{
    using detail::vec_json;
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["radio"] = {{"frequency_hz", c.frequency_hz}, {"tx_power_dbm", c.tx_power_dbm}, {"hop_channels_hz", c.hop_channels_hz}};
    json tags = json::array();
    for (const auto &t : c.tags) {
        json tj = {{"epc", t.epc}, {"position", vec_json(t.position)}};
        tj["offset_rad"] = t.offset_rad ? json(*t.offset_rad) : json("random");
        tags.push_back(std::move(tj));
    }
    j["tags"] = std::move(tags);
    if (c.trajectory.kind == TrajectoryKind::Stepped)
        j["trajectory"] = {{"kind", "stepped"},
                           {"start", vec_json(c.trajectory.start)},
                           {"step", vec_json(c.trajectory.step)},
                           {"dwell_s", c.trajectory.dwell_s},
                           {"n_steps", c.trajectory.n_steps}};
    else
        j["trajectory"] = {{"kind", "gps-file"}, {"path", c.trajectory.path}};
    j["reader"] = {{"read_rate_hz", c.reader.read_rate_hz},
                   {"max_range_m", c.reader.max_range_m},
                   {"miss_probability", c.reader.miss_probability},
                   {"rssi_d0_m", c.reader.rssi.d0_m},
                   {"rssi_p0_dbm", c.reader.rssi.p0_dbm}};
    j["noise"] = {{"phase_sigma_deg", c.phase_sigma_deg}};
    j["multipath"] = {{"enabled", c.multipath.enabled}, {"reflection_coefficient", c.multipath.reflection_coefficient}};
    if (c.gps)
        j["gps"] = {{"origin", {{"lat", c.gps->origin.lat}, {"lon", c.gps->origin.lon}, {"alt", c.gps->origin.alt}}},
                    {"lever_arm", {{"offset", vec_json(c.gps->lever_arm.offset)}, {"heading_rad", c.gps->lever_arm.heading}}},
                    {"heading_from_track", c.gps->heading_from_track},
                    {"rate_hz", c.gps->rate_hz},
                    {"position_sigma_m", c.gps->position_sigma_m},
                    {"correlation_time_s", c.gps->correlation_time_s}};
    j["grid"] = {{"x", detail::axis_json(c.grid.axes[0])},
                 {"y", detail::axis_json(c.grid.axes[1])},
                 {"z", detail::axis_json(c.grid.axes[2])},
                 {"max_cells", c.grid.max_cells}};
    j["estimator"] = {{"prior", to_string(c.estimator.prior)},
                      {"peak_separation_m", c.estimator.peak_separation_m},
                      {"ambiguity_ratio", c.estimator.ambiguity_ratio},
                      {"refine", c.estimator.refine},
                      {"coarse_resolution_m", c.estimator.coarse_resolution_m}};
    j["coil"] = {{"center", vec_json(c.coil.center)}, {"heading_rad", c.coil.heading_rad}};
    return j;
}

inline ScenarioConfig load_scenario(std::istream &in)
{
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::Config, std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(root);
}

inline ScenarioConfig load_scenario_file(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Config, "cannot open scenario '" + path.string() + "'");
    auto c = load_scenario(in);
    c.base_dir = path.parent_path();
    return c;
}

inline std::string save_scenario(const ScenarioConfig &c) { return scenario_to_json(c).dump(2) + "\n"; }

} // namespace rfidalign
