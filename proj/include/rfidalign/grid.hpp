// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/geometry.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace rfidalign {

/// One axis of the hypothesis lattice: either searched over
/// [min, max] at `resolution`, or pinned to `fixed`.
struct GridAxis
{
    bool searched = false;
    double min = 0.0;
    double max = 0.0;
    double resolution = 0.0;
    double fixed = 0.0;

    static GridAxis search(double min, double max, double resolution) { return {true, min, max, resolution, 0.0}; }
    static GridAxis pinned(double value) { return {false, 0.0, 0.0, 0.0, value}; }

    std::size_t count() const noexcept
    {
        if (!searched)
            return 1;
        // Tolerance absorbs representation error in e.g. 0.4 / 0.0025.
        return static_cast<std::size_t>(std::floor((max - min) / resolution + 1e-9)) + 1;
    }

    double coordinate(std::size_t i) const noexcept
    {
        return searched ? min + static_cast<double>(i) * resolution : fixed;
    }

    friend bool operator==(const GridAxis &, const GridAxis &) = default;
};

inline constexpr std::size_t kDefaultCellBudget = 4'000'000;

/// Cells are indexed lexicographically by (ix, iy, iz) with z fastest.
struct GridSpec
{
    std::array<GridAxis, 3> axes;
    std::size_t max_cells = kDefaultCellBudget;

    std::size_t dims() const noexcept
    {
        std::size_t n = 0;
        for (const auto &a : axes)
            n += a.searched ? 1 : 0;
        return n;
    }

    std::array<std::size_t, 3> shape() const noexcept { return {axes[0].count(), axes[1].count(), axes[2].count()}; }

    std::size_t cell_count() const noexcept
    {
        const auto s = shape();
        return s[0] * s[1] * s[2];
    }

    std::size_t linear_index(std::size_t ix, std::size_t iy, std::size_t iz) const noexcept
    {
        const auto s = shape();
        return (ix * s[1] + iy) * s[2] + iz;
    }

    std::array<std::size_t, 3> unravel(std::size_t index) const noexcept
    {
        const auto s = shape();
        return {index / (s[1] * s[2]), (index / s[2]) % s[1], index % s[2]};
    }

    Vec3 cell_center(std::size_t index) const noexcept
    {
        const auto i = unravel(index);
        return {axes[0].coordinate(i[0]), axes[1].coordinate(i[1]), axes[2].coordinate(i[2])};
    }

    friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

inline void validate(const GridSpec &grid)
{
    static constexpr const char *names[3] = {"x", "y", "z"};
    for (std::size_t a = 0; a < 3; ++a) {
        const auto &axis = grid.axes[a];
        if (axis.searched) {
            if (!(axis.min < axis.max))
                throw Error(ErrorKind::Config, std::string("grid axis ") + names[a] + " needs min < max");
            if (!(axis.resolution > 0.0))
                throw Error(ErrorKind::Config, std::string("grid axis ") + names[a] + " needs resolution > 0");
        } else if (!std::isfinite(axis.fixed)) {
            throw Error(ErrorKind::Config, std::string("grid axis ") + names[a] + " has a non-finite fixed value");
        }
    }
    const std::size_t d = grid.dims();
    if (d != 2 && d != 3)
        throw Error(ErrorKind::Config, "grid must search 2 or 3 axes");
    // Guard the product against overflow before comparing to the budget.
    double cells = 1.0;
    for (const auto &axis : grid.axes)
        cells *= static_cast<double>(axis.count());
    if (cells > static_cast<double>(grid.max_cells))
        throw Error(ErrorKind::Config, "grid has " + std::to_string(static_cast<long long>(cells)) +
                                           " cells, budget is " + std::to_string(grid.max_cells));
}

struct LikelihoodMap
{
    GridSpec grid;
    std::vector<double> values;  // one per cell, each in [0, 1]
    std::size_t reads_used = 0;

    double at(std::size_t ix, std::size_t iy, std::size_t iz = 0) const { return values[grid.linear_index(ix, iy, iz)]; }
};

} // namespace rfidalign
