// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/geometry.hpp"
#include "rfidalign/grid.hpp"
#include "rfidalign/read_simulator.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// CSV readers and writers for reader logs, GPS tracks and likelihood maps.
// All writers use LF line endings and fixed decimal places so equal inputs
// produce identical bytes.

namespace rfidalign::io {

inline constexpr std::string_view kReadLogHeader = "epc,t_s,phase_deg,rssi_dbm,channel_mhz";
inline constexpr std::string_view kGpsLogHeader = "t_s,lat_deg,lon_deg,alt_m";
inline constexpr std::string_view kMapCsvHeader = "x_m,y_m,likelihood";

namespace detail {

/// Fixed-point text with no negative zero.
inline std::string fixed(double v, int decimals)
{
    std::string s = fmt::format("{:.{}f}", v, decimals);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos)
        s.erase(0, 1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view line)
{
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    return line;
}

/// Thrown per row; the caller decides whether to skip (lenient) or abort.
struct RowError
{
    std::string field;
    std::string message;
    ErrorKind kind = ErrorKind::Format;
};

inline double parse_number(std::string_view text, const char *field)
{
    double v = 0.0;
    const auto *end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != end || !std::isfinite(v))
        throw RowError{field, "not a finite number: '" + std::string(text) + "'"};
    return v;
}

inline Error row_error(std::size_t line_no, const RowError &e)
{
    return Error(e.kind, "line " + std::to_string(line_no) + ", field " + e.field + ": " + e.message);
}

} // namespace detail

/// Rows rejected in lenient mode are counted instead of raising.
struct ParseOptions
{
    bool lenient = false;
};

template <typename T>
struct Parsed
{
    std::vector<T> items;
    std::size_t skipped = 0;
};

// ------------------------------------------------------------------------
// Reader logs

inline void write_read_log(std::span<const ReadEvent> events, std::ostream &out)
{
    out << kReadLogHeader << '\n';
    for (const auto &ev : events) {
        // A phase within 5e-7 of 180 would print as 180.000000, which is
        // outside the folded range; it is the same reading as 0.
        std::string phase = detail::fixed(ev.phase.value(), 6);
        if (phase == "180.000000")
            phase = "0.000000";
        out << ev.epc << ',' << detail::fixed(ev.t, 6) << ',' << phase << ',' << detail::fixed(ev.rssi_dbm, 6) << ','
            << detail::fixed(ev.channel_hz / 1e6, 6) << '\n';
    }
    if (!out)
        throw Error(ErrorKind::Io, "failed writing read log");
}

inline Parsed<ReadEvent> parse_read_log(std::istream &in, const ParseOptions &options = {})
{
    Parsed<ReadEvent> result;
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != kReadLogHeader)
        throw Error(ErrorKind::Format, "read log header must be '" + std::string(kReadLogHeader) + "'");

    std::size_t line_no = 1;
    double last_t = -std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = detail::strip_cr(line);
        if (row.empty())
            continue;
        try {
            const auto fields = detail::split_csv(row);
            if (fields.size() != 5)
                throw detail::RowError{"row", "expected 5 fields, got " + std::to_string(fields.size())};
            ReadEvent ev;
            ev.epc = std::string(fields[0]);
            if (ev.epc.empty() || ev.epc.size() > 24)
                throw detail::RowError{"epc", "identifier must have 1..24 characters"};
            ev.t = detail::parse_number(fields[1], "t_s");
            if (ev.t < 0.0)
                throw detail::RowError{"t_s", "negative timestamp"};
            if (ev.t < last_t)
                throw detail::RowError{"t_s", "timestamps must be non-decreasing"};
            const double phase = detail::parse_number(fields[2], "phase_deg");
            if (!(phase >= 0.0 && phase < 180.0))
                throw detail::RowError{"phase_deg", "phase " + std::string(fields[2]) + " outside [0, 180)"};
            ev.phase = FoldedPhaseDeg(phase);
            ev.rssi_dbm = detail::parse_number(fields[3], "rssi_dbm");
            const double mhz = detail::parse_number(fields[4], "channel_mhz");
            if (!(mhz > 0.0))
                throw detail::RowError{"channel_mhz", "channel must be positive"};
            ev.channel_hz = mhz * 1e6;
            last_t = ev.t;
            result.items.push_back(std::move(ev));
        } catch (const detail::RowError &e) {
            if (!options.lenient)
                throw detail::row_error(line_no, e);
            ++result.skipped;
        }
    }
    return result;
}

// ------------------------------------------------------------------------
// GPS tracks

/// Latitude/longitude carry 9 decimals (~0.1 mm); six would quantize
/// positions to ~11 cm.
inline void write_gps_log(std::span<const GeoFix> fixes, std::ostream &out)
{
    out << kGpsLogHeader << '\n';
    for (const auto &f : fixes)
        out << detail::fixed(f.t, 6) << ',' << detail::fixed(f.lat, 9) << ',' << detail::fixed(f.lon, 9) << ','
            << detail::fixed(f.alt, 6) << '\n';
    if (!out)
        throw Error(ErrorKind::Io, "failed writing GPS log");
}

inline Parsed<GeoFix> parse_gps_log(std::istream &in, const ParseOptions &options = {})
{
    Parsed<GeoFix> result;
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != kGpsLogHeader)
        throw Error(ErrorKind::Format, "GPS log header must be '" + std::string(kGpsLogHeader) + "'");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = detail::strip_cr(line);
        if (row.empty())
            continue;
        try {
            const auto fields = detail::split_csv(row);
            if (fields.size() != 4)
                throw detail::RowError{"row", "expected 4 fields, got " + std::to_string(fields.size())};
            GeoFix fix;
            fix.t = detail::parse_number(fields[0], "t_s");
            fix.lat = detail::parse_number(fields[1], "lat_deg");
            fix.lon = detail::parse_number(fields[2], "lon_deg");
            fix.alt = detail::parse_number(fields[3], "alt_m");
            if (fix.lat < -90.0 || fix.lat > 90.0)
                throw detail::RowError{"lat_deg", "latitude outside [-90, 90]", ErrorKind::Range};
            if (fix.lon < -180.0 || fix.lon > 180.0)
                throw detail::RowError{"lon_deg", "longitude outside [-180, 180]", ErrorKind::Range};
            if (!result.items.empty() && !(fix.t > result.items.back().t))
                throw detail::RowError{"t_s", "timestamps must be strictly increasing"};
            result.items.push_back(fix);
        } catch (const detail::RowError &e) {
            if (!options.lenient)
                throw detail::row_error(line_no, e);
            ++result.skipped;
        }
    }
    return result;
}

// ------------------------------------------------------------------------
// Likelihood maps

enum class MapFormat { Csv, Pgm };

inline MapFormat parse_map_format(std::string_view name)
{
    if (name == "csv")
        return MapFormat::Csv;
    if (name == "pgm")
        return MapFormat::Pgm;
    throw Error(ErrorKind::Argument, "unsupported map format '" + std::string(name) + "'");
}

/// The two searched axes of a 2D slice, plus the remaining axis index.
struct SliceAxes
{
    std::size_t u = 0;
    std::size_t v = 1;
    std::size_t w = 2;
};

inline SliceAxes slice_axes(const GridSpec &grid)
{
    std::vector<std::size_t> searched;
    std::size_t other = 2;
    for (std::size_t a = 0; a < 3; ++a) {
        if (grid.axes[a].searched)
            searched.push_back(a);
        else
            other = a;
    }
    if (searched.size() == 3)
        return {0, 1, 2};
    if (searched.size() != 2)
        throw Error(ErrorKind::Argument, "map export needs a 2D or 3D grid");
    return {searched[0], searched[1], other};
}

inline std::size_t slice_count(const LikelihoodMap &map) { return map.grid.shape()[slice_axes(map.grid).w]; }

namespace detail {

inline std::size_t cell_of(const GridSpec &grid, const SliceAxes &ax, std::size_t iu, std::size_t iv, std::size_t iw)
{
    std::size_t idx[3] = {0, 0, 0};
    idx[ax.u] = iu;
    idx[ax.v] = iv;
    idx[ax.w] = iw;
    return grid.linear_index(idx[0], idx[1], idx[2]);
}

} // namespace detail

/// CSV of one slice: first searched axis under x_m, second under y_m, rows
/// ordered by cell index. For a 3D grid `slice` indexes the third axis.
inline void export_map_csv(const LikelihoodMap &map, std::ostream &out, std::size_t slice = 0)
{
    const auto ax = slice_axes(map.grid);
    const auto shape = map.grid.shape();
    if (slice >= shape[ax.w])
        throw Error(ErrorKind::Argument, "slice index out of range");
    out << kMapCsvHeader << '\n';
    for (std::size_t iu = 0; iu < shape[ax.u]; ++iu)
        for (std::size_t iv = 0; iv < shape[ax.v]; ++iv) {
            const double value = map.values[detail::cell_of(map.grid, ax, iu, iv, slice)];
            out << detail::fixed(map.grid.axes[ax.u].coordinate(iu), 6) << ','
                << detail::fixed(map.grid.axes[ax.v].coordinate(iv), 6) << ',' << detail::fixed(value, 6) << '\n';
        }
    if (!out)
        throw Error(ErrorKind::Io, "failed writing map");
}

/// Binary 16-bit PGM (P5, big-endian). Columns follow the first searched
/// axis; row 0 is the maximum of the second searched axis.
inline void export_map_pgm(const LikelihoodMap &map, std::ostream &out, std::size_t slice = 0)
{
    const auto ax = slice_axes(map.grid);
    const auto shape = map.grid.shape();
    if (slice >= shape[ax.w])
        throw Error(ErrorKind::Argument, "slice index out of range");
    const std::size_t width = shape[ax.u];
    const std::size_t height = shape[ax.v];
    out << "P5\n" << width << ' ' << height << "\n65535\n";
    std::string row(2 * width, '\0');
    for (std::size_t r = 0; r < height; ++r) {
        const std::size_t iv = height - 1 - r;
        for (std::size_t iu = 0; iu < width; ++iu) {
            const double value = std::clamp(map.values[detail::cell_of(map.grid, ax, iu, iv, slice)], 0.0, 1.0);
            const auto pixel = static_cast<std::uint16_t>(std::lround(65535.0 * value));
            row[2 * iu] = static_cast<char>(pixel >> 8);
            row[2 * iu + 1] = static_cast<char>(pixel & 0xFF);
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out)
        throw Error(ErrorKind::Io, "failed writing map");
}

inline void export_map(const LikelihoodMap &map, MapFormat format, std::ostream &out, std::size_t slice = 0)
{
    if (format == MapFormat::Csv)
        export_map_csv(map, out, slice);
    else
        export_map_pgm(map, out, slice);
}

/// Reads back a CSV slice as (u, v, likelihood) triples.
struct MapCsvRow
{
    double x = 0.0;
    double y = 0.0;
    double likelihood = 0.0;
};

inline std::vector<MapCsvRow> parse_map_csv(std::istream &in)
{
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != kMapCsvHeader)
        throw Error(ErrorKind::Format, "map header must be '" + std::string(kMapCsvHeader) + "'");
    std::vector<MapCsvRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = detail::strip_cr(line);
        if (row.empty())
            continue;
        try {
            const auto f = detail::split_csv(row);
            if (f.size() != 3)
                throw detail::RowError{"row", "expected 3 fields"};
            rows.push_back({detail::parse_number(f[0], "x_m"), detail::parse_number(f[1], "y_m"),
                            detail::parse_number(f[2], "likelihood")});
        } catch (const detail::RowError &e) {
            throw detail::row_error(line_no, e);
        }
    }
    return rows;
}

// ------------------------------------------------------------------------
// File helpers

inline std::ifstream open_input(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string &path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
    return out;
}

} // namespace rfidalign::io
