// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

// Local metric frame: x along-track (longitudinal), y lateral, z vertical up.

namespace rfidalign {

struct Vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 &operator+=(const Vec3 &o) noexcept
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Vec3 &operator-=(const Vec3 &o) noexcept
    {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3 &b) noexcept { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3 &b) noexcept { return a -= b; }
    friend constexpr Vec3 operator-(const Vec3 &a) noexcept { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(double s, const Vec3 &a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr bool operator==(const Vec3 &, const Vec3 &) = default;

    double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr double dot(const Vec3 &a, const Vec3 &b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline double distance(const Vec3 &a, const Vec3 &b) noexcept { return (a - b).norm(); }

struct TimedPose
{
    double t = 0.0;  // seconds
    Vec3 position;   // RFID antenna phase center
};

/// Time-ordered antenna positions with piecewise-linear interpolation.
/// A default-constructed trajectory is empty; any trajectory built from
/// poses has at least one pose and strictly increasing timestamps.
class Trajectory
{
  public:
    Trajectory() = default;

    explicit Trajectory(std::vector<TimedPose> poses) : poses_(std::move(poses))
    {
        if (poses_.empty())
            throw Error(ErrorKind::Argument, "trajectory needs at least one pose");
        for (std::size_t i = 0; i < poses_.size(); ++i) {
            const auto &p = poses_[i];
            if (!std::isfinite(p.t) || p.t < 0.0)
                throw Error(ErrorKind::Argument, "pose " + std::to_string(i) + " has an invalid timestamp");
            if (!p.position.finite())
                throw Error(ErrorKind::Argument, "pose " + std::to_string(i) + " has a non-finite position");
            if (i > 0 && !(p.t > poses_[i - 1].t))
                throw Error(ErrorKind::Format, "pose timestamps must be strictly increasing (pose " +
                                                   std::to_string(i) + ")");
        }
    }

    bool empty() const noexcept { return poses_.empty(); }
    std::size_t size() const noexcept { return poses_.size(); }
    std::span<const TimedPose> poses() const noexcept { return poses_; }
    const TimedPose &front() const { return poses_.front(); }
    const TimedPose &back() const { return poses_.back(); }
    double start_time() const { return poses_.front().t; }
    double end_time() const { return poses_.back().t; }
    double span() const { return empty() ? 0.0 : end_time() - start_time(); }

    bool covers(double t) const noexcept { return !empty() && t >= start_time() && t <= end_time(); }

  private:
    std::vector<TimedPose> poses_;
};

/// Antenna position at time `t`; no extrapolation outside the pose span.
inline Vec3 position_at(const Trajectory &traj, double t)
{
    if (!traj.covers(t))
        throw Error(ErrorKind::Range, "time " + std::to_string(t) + " s is outside the trajectory span");
    const auto poses = traj.poses();
    auto hi = std::lower_bound(poses.begin(), poses.end(), t,
                               [](const TimedPose &p, double value) { return p.t < value; });
    if (hi->t == t)
        return hi->position;
    auto lo = std::prev(hi);
    const double w = (t - lo->t) / (hi->t - lo->t);
    return lo->position + w * (hi->position - lo->position);
}

/// Cart-on-a-rack motion: pose k at t = k * dwell, position start + k * step.
inline Trajectory stepped_trajectory(const Vec3 &start, const Vec3 &step, double dwell, std::size_t n_steps)
{
    if (n_steps == 0)
        throw Error(ErrorKind::Argument, "stepped trajectory needs n_steps >= 1");
    if (!(dwell > 0.0))
        throw Error(ErrorKind::Argument, "stepped trajectory needs dwell > 0");
    std::vector<TimedPose> poses;
    poses.reserve(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double kk = static_cast<double>(k);
        poses.push_back({kk * dwell, start + kk * step});
    }
    return Trajectory(std::move(poses));
}

// ------------------------------------------------------------------------
// GPS ingestion

inline constexpr double kEarthRadius = 6'371'000.0;  // meters, spherical model

struct GeoFix
{
    double t = 0.0;    // seconds
    double lat = 0.0;  // degrees WGS-84
    double lon = 0.0;  // degrees WGS-84
    double alt = 0.0;  // meters
};

inline void validate(const GeoFix &fix)
{
    if (!std::isfinite(fix.t) || !std::isfinite(fix.alt))
        throw Error(ErrorKind::Range, "GPS fix has non-finite time or altitude");
    if (!(fix.lat >= -90.0 && fix.lat <= 90.0))
        throw Error(ErrorKind::Range, "latitude " + std::to_string(fix.lat) + " outside [-90, 90]");
    if (!(fix.lon >= -180.0 && fix.lon <= 180.0))
        throw Error(ErrorKind::Range, "longitude " + std::to_string(fix.lon) + " outside [-180, 180]");
}

namespace detail {
constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }
} // namespace detail

/// Equirectangular ENU projection of one fix about `origin`.
inline Vec3 geo_to_local(const GeoFix &fix, const GeoFix &origin) noexcept
{
    const double east = kEarthRadius * std::cos(detail::deg2rad(origin.lat)) * detail::deg2rad(fix.lon - origin.lon);
    const double north = kEarthRadius * detail::deg2rad(fix.lat - origin.lat);
    return {east, north, fix.alt - origin.alt};
}

/// Inverse of geo_to_local; used to synthesize GPS tracks.
inline GeoFix local_to_geo(const Vec3 &p, double t, const GeoFix &origin) noexcept
{
    GeoFix fix;
    fix.t = t;
    fix.lat = origin.lat + detail::rad2deg(p.y / kEarthRadius);
    fix.lon = origin.lon + detail::rad2deg(p.x / (kEarthRadius * std::cos(detail::deg2rad(origin.lat))));
    fix.alt = origin.alt + p.z;
    return fix;
}

inline Trajectory geo_to_local(std::span<const GeoFix> fixes, const GeoFix &origin)
{
    if (fixes.empty())
        throw Error(ErrorKind::Argument, "GPS track is empty");
    validate(origin);
    std::vector<TimedPose> poses;
    poses.reserve(fixes.size());
    for (std::size_t i = 0; i < fixes.size(); ++i) {
        validate(fixes[i]);
        if (i > 0 && !(fixes[i].t > fixes[i - 1].t))
            throw Error(ErrorKind::Format, "GPS timestamps must be strictly increasing (fix " + std::to_string(i) + ")");
        poses.push_back({fixes[i].t, geo_to_local(fixes[i], origin)});
    }
    return Trajectory(std::move(poses));
}

// ------------------------------------------------------------------------
// Lever arm

/// Rigid offset from the GPS antenna to the RFID antenna in the vehicle
/// body frame; `heading` is the vehicle yaw measured from +x.
struct LeverArm
{
    Vec3 offset;
    double heading = 0.0;
};

/// Body-frame vector rotated about z into the local frame.
inline Vec3 rotate_z(const Vec3 &v, double heading) noexcept
{
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

inline void validate(const LeverArm &arm)
{
    if (!arm.offset.finite())
        throw Error(ErrorKind::Argument, "lever arm offset must be finite");
    if (!(arm.heading >= -std::numbers::pi && arm.heading <= std::numbers::pi))
        throw Error(ErrorKind::Argument, "lever arm heading must lie in [-pi, pi]");
}

inline Trajectory apply_lever_arm(const Trajectory &traj, const LeverArm &arm)
{
    validate(arm);
    const Vec3 shift = rotate_z(arm.offset, arm.heading);
    std::vector<TimedPose> poses(traj.poses().begin(), traj.poses().end());
    for (auto &p : poses)
        p.position += shift;
    return poses.empty() ? Trajectory{} : Trajectory(std::move(poses));
}

/// Per-pose yaw from a forward finite difference over at least
/// `min_baseline` seconds (backward difference near the end of the track).
inline std::vector<double> track_headings(const Trajectory &traj, double min_baseline = 0.5)
{
    const auto poses = traj.poses();
    if (poses.size() < 2 || traj.span() < min_baseline)
        throw Error(ErrorKind::InsufficientData, "track too short to derive heading");
    std::vector<double> headings(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        std::size_t a = i;
        std::size_t b = i;
        while (b + 1 < poses.size() && poses[b].t - poses[a].t < min_baseline)
            ++b;
        while (a > 0 && poses[b].t - poses[a].t < min_baseline)
            --a;
        const Vec3 d = poses[b].position - poses[a].position;
        headings[i] = std::atan2(d.y, d.x);
    }
    return headings;
}

/// Lever arm with a per-pose heading, e.g. from track_headings().
inline Trajectory apply_lever_arm(const Trajectory &traj, const Vec3 &offset, std::span<const double> headings)
{
    if (headings.size() != traj.size())
        throw Error(ErrorKind::Argument, "one heading per pose is required");
    std::vector<TimedPose> poses(traj.poses().begin(), traj.poses().end());
    for (std::size_t i = 0; i < poses.size(); ++i)
        poses[i].position += rotate_z(offset, headings[i]);
    return poses.empty() ? Trajectory{} : Trajectory(std::move(poses));
}

} // namespace rfidalign
