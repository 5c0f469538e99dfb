// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/geometry.hpp"
#include "rfidalign/grid.hpp"
#include "rfidalign/phase_model.hpp"
#include "rfidalign/read_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

// Grid maximum-likelihood search for the antenna start position.
//
// Every lattice cell is a hypothesis for where the antenna was at the
// reference time. Given the known relative motion, each hypothesis predicts
// a folded phase series for a tag at a known position. Cells are scored by
// the coherence of the measured-minus-predicted residuals:
//
//     L = | (1/K) * sum_k exp(i * 2 * (measured_k - predicted_k)) |
//
// Doubling the residual removes the 180 degree reader fold, and taking the
// magnitude of the mean phasor cancels any constant per-tag phase offset.

namespace rfidalign {

/// Antenna displacement relative to the first pose of a trajectory.
class MotionModel
{
  public:
    explicit MotionModel(Trajectory trajectory) : trajectory_(std::move(trajectory))
    {
        if (trajectory_.empty())
            throw Error(ErrorKind::Argument, "motion model needs a non-empty trajectory");
        origin_ = trajectory_.front().position;
    }

    Vec3 displacement(double t) const { return position_at(trajectory_, t) - origin_; }

    bool covers(double t) const noexcept { return trajectory_.covers(t); }
    double reference_time() const { return trajectory_.start_time(); }
    const Trajectory &trajectory() const noexcept { return trajectory_; }

    /// Unit horizontal direction of travel (first to last pose); +x when the
    /// trajectory does not move horizontally.
    Vec3 heading_direction() const
    {
        const Vec3 d = trajectory_.back().position - origin_;
        const double n = std::hypot(d.x, d.y);
        if (n <= 0.0)
            return {1.0, 0.0, 0.0};
        return {d.x / n, d.y / n, 0.0};
    }

  private:
    Trajectory trajectory_;
    Vec3 origin_;
};

inline std::vector<FoldedPhaseDeg> predicted_phase_series(const Vec3 &start, const MotionModel &motion,
                                                          const Vec3 &tag_position, const RadioConfig &radio,
                                                          std::span<const double> times)
{
    std::vector<FoldedPhaseDeg> out;
    out.reserve(times.size());
    for (double t : times) {
        const double d = distance(start + motion.displacement(t), tag_position);
        out.push_back(fold_to_reader_deg(round_trip_phase(d, radio.wavelength())));
    }
    return out;
}

inline double coherent_likelihood(std::span<const FoldedPhaseDeg> measured, std::span<const FoldedPhaseDeg> predicted)
{
    if (measured.size() != predicted.size())
        throw Error(ErrorKind::Argument, "measured and predicted series differ in length");
    if (measured.empty())
        throw Error(ErrorKind::Argument, "likelihood needs at least one phase");
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < measured.size(); ++k) {
        const double delta = 2.0 * (measured[k].radians() - predicted[k].radians());
        re += std::cos(delta);
        im += std::sin(delta);
    }
    return std::min(1.0, std::hypot(re, im) / static_cast<double>(measured.size()));
}

struct MapOptions
{
    unsigned threads = 0;  // 0: std::thread::hardware_concurrency()
};

namespace detail {

/// Branch-free sin/cos for |x| up to ~1e5 rad (Cody-Waite reduction by
/// pi/2, fdlibm kernel polynomials on [-pi/4, pi/4]). Written so the map
/// kernel's inner loop vectorizes; agrees with libm to a few ulp.
inline void sincos_reduced(double x, double &sin_out, double &cos_out) noexcept
{
    constexpr double two_over_pi = 6.36619772367581382433e-01;
    constexpr double pio2_1 = 1.57079632673412561417e+00;
    constexpr double pio2_2 = 6.07710050630396597660e-11;
    constexpr double pio2_3 = 2.02226624871116645580e-21;
    constexpr double round_magic = 6755399441055744.0;  // 1.5 * 2^52

    const double n = (x * two_over_pi + round_magic) - round_magic;
    const double r = ((x - n * pio2_1) - n * pio2_2) - n * pio2_3;

    // Quadrant q = n - 4 * round(n / 4), an integer in [-2, 2].
    const double quarter = n * 0.25;
    const double q = n - 4.0 * ((quarter + round_magic) - round_magic);

    const double z = r * r;
    const double s = r + r * z *
                             (-1.66666666666666324348e-01 +
                              z * (8.33333333332248946124e-03 +
                                   z * (-1.98412698298579493134e-04 +
                                        z * (2.75573137070700676789e-06 +
                                             z * (-2.50507602534068634195e-08 + z * 1.58969099521155010221e-10)))));
    const double c = 1.0 - 0.5 * z +
                     z * z *
                         (4.16666666666666019037e-02 +
                          z * (-1.38888888888741095749e-03 +
                               z * (2.48015872894767294178e-05 +
                                    z * (-2.75573143513906633035e-07 +
                                         z * (2.08757232129817482790e-09 + z * -1.13596475577881948265e-11)))));

    // (cos, sin)(q * pi / 2) as polynomials that are exact on q = -2..2,
    // which keeps the loop free of branches.
    const double q2 = q * q;
    const double rot_c = (6.0 - 7.0 * q2 + q2 * q2) / 6.0;
    const double rot_s = q * (4.0 - q2) / 3.0;
    sin_out = rot_c * s + rot_s * c;
    cos_out = rot_c * c - rot_s * s;
}

template <typename Fn>
void parallel_for_chunks(std::size_t n, unsigned threads, Fn &&fn)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, n / 256)));
    if (threads <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t begin = std::min(n, w * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end)
            pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
}

} // namespace detail

/// Likelihood of every grid cell for one tag's reads. Each read's own
/// channel sets its wavelength (falling back to `radio` when unset).
/// Per-cell sums run over reads in input order, so the result does not
/// depend on the thread count.
inline LikelihoodMap compute_likelihood_map(std::span<const ReadEvent> reads, const MotionModel &motion,
                                            const Vec3 &tag_position, const RadioConfig &radio,
                                            const GridSpec &grid, const MapOptions &options = {})
{
    validate(grid);
    if (reads.size() < 2)
        throw Error(ErrorKind::InsufficientData,
                    "likelihood map needs at least 2 reads, got " + std::to_string(reads.size()));

    // Per-read constants: offset from the tag at zero start, doubled-phase
    // wavenumber 8*pi/lambda and the doubled measured phasor.
    const std::size_t K = reads.size();
    std::vector<double> rx(K), ry(K), rz(K), wavenumber(K), mc(K), ms(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto &r = reads[k];
        if (!motion.covers(r.t))
            throw Error(ErrorKind::Range, "read at t = " + std::to_string(r.t) + " s is outside the motion span");
        const Vec3 rel = motion.displacement(r.t) - tag_position;
        rx[k] = rel.x;
        ry[k] = rel.y;
        rz[k] = rel.z;
        const double lambda = r.channel_hz > 0.0 ? wavelength(r.channel_hz) : radio.wavelength();
        wavenumber[k] = 4.0 * kTwoPi / lambda;
        mc[k] = std::cos(2.0 * r.phase.radians());
        ms[k] = std::sin(2.0 * r.phase.radians());
    }

    LikelihoodMap map;
    map.grid = grid;
    map.reads_used = K;
    map.values.assign(grid.cell_count(), 0.0);
    const double inv_k = 1.0 / static_cast<double>(K);

    detail::parallel_for_chunks(map.values.size(), options.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> cos_pred(K), sin_pred(K);
        for (std::size_t cell = begin; cell < end; ++cell) {
            const Vec3 p = grid.cell_center(cell);
            // Phasor pass has no loop-carried state and vectorizes; the sum
            // below stays in read order.
            for (std::size_t k = 0; k < K; ++k) {
                const double dx = p.x + rx[k];
                const double dy = p.y + ry[k];
                const double dz = p.z + rz[k];
                detail::sincos_reduced(wavenumber[k] * std::sqrt(dx * dx + dy * dy + dz * dz), sin_pred[k],
                                       cos_pred[k]);
            }
            double re = 0.0;
            double im = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                re += mc[k] * cos_pred[k] + ms[k] * sin_pred[k];
                im += ms[k] * cos_pred[k] - mc[k] * sin_pred[k];
            }
            map.values[cell] = std::min(1.0, std::hypot(re, im) * inv_k);
        }
    });
    return map;
}

/// Equal-weight pooling of per-tag maps: per-cell geometric mean.
inline LikelihoodMap fuse_tag_maps(std::span<const LikelihoodMap> maps)
{
    if (maps.empty())
        throw Error(ErrorKind::Argument, "nothing to fuse");
    if (maps.size() == 1)
        return maps.front();
    LikelihoodMap fused;
    fused.grid = maps.front().grid;
    fused.values.assign(fused.grid.cell_count(), 0.0);
    for (const auto &m : maps) {
        if (!(m.grid == fused.grid) || m.values.size() != fused.values.size())
            throw Error(ErrorKind::Argument, "cannot fuse maps on different grids");
        fused.reads_used += m.reads_used;
    }
    const double inv_n = 1.0 / static_cast<double>(maps.size());
    for (std::size_t c = 0; c < fused.values.size(); ++c) {
        double log_sum = 0.0;
        for (const auto &m : maps) {
            if (m.values[c] <= 0.0) {
                log_sum = -std::numeric_limits<double>::infinity();
                break;
            }
            log_sum += std::log(m.values[c]);
        }
        fused.values[c] = std::clamp(std::exp(log_sum * inv_n), 0.0, 1.0);
    }
    return fused;
}

struct Peak
{
    Vec3 position;
    double likelihood = 0.0;
    std::size_t cell = 0;
};

/// Top-k local maxima, highest first. Equal values are ordered by cell
/// index, so on a plateau only the lowest-index cell counts as a maximum.
/// A candidate within `min_separation` of an accepted peak is dropped.
inline std::vector<Peak> find_peaks(const LikelihoodMap &map, std::size_t k, double min_separation)
{
    if (k == 0)
        throw Error(ErrorKind::Argument, "find_peaks needs k >= 1");
    const auto &grid = map.grid;
    const auto shape = grid.shape();
    auto beats = [&](std::size_t a, std::size_t b) {
        return map.values[a] > map.values[b] || (map.values[a] == map.values[b] && a < b);
    };

    std::vector<std::size_t> maxima;
    for (std::size_t cell = 0; cell < map.values.size(); ++cell) {
        const auto idx = grid.unravel(cell);
        bool is_max = true;
        for (int dx = -1; dx <= 1 && is_max; ++dx)
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dz = -1; dz <= 1 && is_max; ++dz) {
                    if (dx == 0 && dy == 0 && dz == 0)
                        continue;
                    const long nx = static_cast<long>(idx[0]) + dx;
                    const long ny = static_cast<long>(idx[1]) + dy;
                    const long nz = static_cast<long>(idx[2]) + dz;
                    if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<long>(shape[0]) ||
                        ny >= static_cast<long>(shape[1]) || nz >= static_cast<long>(shape[2]))
                        continue;
                    const std::size_t other = grid.linear_index(static_cast<std::size_t>(nx),
                                                                static_cast<std::size_t>(ny), static_cast<std::size_t>(nz));
                    if (!beats(cell, other))
                        is_max = false;
                }
        if (is_max)
            maxima.push_back(cell);
    }
    std::sort(maxima.begin(), maxima.end(), beats);

    std::vector<Peak> peaks;
    for (std::size_t cell : maxima) {
        const Vec3 p = grid.cell_center(cell);
        const bool suppressed = std::any_of(peaks.begin(), peaks.end(), [&](const Peak &q) {
            return distance(p, q.position) < min_separation;
        });
        if (suppressed)
            continue;
        peaks.push_back({p, map.values[cell], cell});
        if (peaks.size() == k)
            break;
    }
    return peaks;
}

enum class SidePrior { None, LeftOfTag, RightOfTag };

struct EstimateResult
{
    Vec3 best;
    double best_likelihood = 0.0;
    std::optional<Vec3> mirror;
    std::optional<double> mirror_likelihood;
    bool ambiguous = false;
    std::optional<double> lateral_offset;
    std::optional<double> vertical_offset;
    std::map<std::string, std::size_t> per_tag_read_counts;
};

/// Signed side of `p` relative to the line through `tag_position` along the
/// direction of travel: positive is left when looking forward.
inline double side_of_motion_line(const Vec3 &p, const MotionModel &motion, const Vec3 &tag_position)
{
    const Vec3 u = motion.heading_direction();
    const Vec3 r = p - tag_position;
    return u.x * r.y - u.y * r.x;
}

/// Peaks whose likelihood ratio to the best exceeds this are reported as
/// ambiguous when no side prior is given.
inline constexpr double kAmbiguityRatio = 0.9;

inline EstimateResult resolve_estimate(std::span<const Peak> peaks, SidePrior prior, const MotionModel &motion,
                                       const Vec3 &tag_position, double ambiguity_ratio = kAmbiguityRatio)
{
    if (peaks.empty())
        throw Error(ErrorKind::Argument, "no peaks to resolve");
    EstimateResult result;

    if (prior == SidePrior::None) {
        result.best = peaks[0].position;
        result.best_likelihood = peaks[0].likelihood;
        if (peaks.size() >= 2 && peaks[1].likelihood > ambiguity_ratio * peaks[0].likelihood) {
            result.ambiguous = true;
            result.mirror = peaks[1].position;
            result.mirror_likelihood = peaks[1].likelihood;
        }
        return result;
    }

    constexpr double on_line = 1e-12;
    auto on_prior_side = [&](const Peak &p) {
        const double s = side_of_motion_line(p.position, motion, tag_position);
        return prior == SidePrior::LeftOfTag ? s >= -on_line : s <= on_line;
    };
    const auto chosen = std::find_if(peaks.begin(), peaks.end(), on_prior_side);
    if (chosen == peaks.end())
        throw Error(ErrorKind::PriorViolation, "no likelihood peak on the prior side of the motion line");
    result.best = chosen->position;
    result.best_likelihood = chosen->likelihood;
    for (const auto &p : peaks) {
        if (&p != &*chosen) {
            result.mirror = p.position;
            result.mirror_likelihood = p.likelihood;
            break;
        }
    }
    return result;
}

/// Roadway coil pose: center and orthonormal longitudinal / lateral /
/// vertical axes.
struct CoilFrame
{
    Vec3 center;
    Vec3 longitudinal{1.0, 0.0, 0.0};
    Vec3 lateral{0.0, 1.0, 0.0};
    Vec3 vertical{0.0, 0.0, 1.0};

    static CoilFrame from_heading(const Vec3 &center, double heading)
    {
        const double c = std::cos(heading);
        const double s = std::sin(heading);
        return {center, {c, s, 0.0}, {-s, c, 0.0}, {0.0, 0.0, 1.0}};
    }
};

struct Misalignment
{
    double lateral = 0.0;
    double vertical = 0.0;
};

inline Misalignment misalignment_report(const EstimateResult &estimate, const CoilFrame &coil)
{
    if (estimate.ambiguous)
        throw Error(ErrorKind::Ambiguity, "two indistinguishable peaks; supply a side prior");
    const Vec3 offset = estimate.best - coil.center;
    return {dot(offset, coil.lateral), dot(offset, coil.vertical)};
}

/// Sub-grid of `grid` centered on `center` spanning +-half_width on each
/// searched axis at `resolution`, clipped to the parent extent.
inline GridSpec window_around(const GridSpec &grid, const Vec3 &center, double half_width, double resolution)
{
    GridSpec out = grid;
    const double c[3] = {center.x, center.y, center.z};
    for (std::size_t a = 0; a < 3; ++a) {
        auto &axis = out.axes[a];
        if (!axis.searched)
            continue;
        const double lo = std::max(axis.min, c[a] - half_width);
        const double hi = std::min(axis.max, c[a] + half_width);
        axis = GridAxis::search(lo, std::max(hi, lo + resolution), resolution);
    }
    return out;
}

} // namespace rfidalign
