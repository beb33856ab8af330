#pragma once

#include <map>
#include <string>
#include <vector>

#include "aerial_twin/types.hpp"

namespace aerial_twin::mobility {

enum class TrajectoryMode { HoverSequence, ConstantSpeedPath, Static };

struct Waypoint {
    Vec3 pos;
    double hold_s = 0.0;

    bool operator==(const Waypoint&) const = default;
};

/// Timed waypoint path. Every waypoint is held for hold_s, then the UE moves
/// in a straight line to the next one at speed_mps. In hover mode a zero
/// speed makes transits instantaneous; validate() warns about that.
struct Trajectory {
    std::string name;
    TrajectoryMode mode = TrajectoryMode::Static;
    std::vector<Waypoint> waypoints;
    double speed_mps = 0.0;

    bool operator==(const Trajectory&) const = default;
};

/// Throws std::invalid_argument on a broken trajectory.
void validate(const Trajectory& traj);

Vec3 position_at(const Trajectory& traj, double t_s);

/// Time at which the final waypoint's hold ends.
double duration_s(const Trajectory& traj);

/// Hover points of fig3_hover, gNB antenna height and the fig4 flight altitude.
inline constexpr double kGnbAntennaHeightM = 2.5;
inline constexpr double kFig3HoldS = 10.0;
inline constexpr double kFig3TransitSpeedMps = 5.0;
inline constexpr double kFig4AltitudeM = 120.0;
inline constexpr double kFig4SpeedMps = 10.0;

/// `fig3_hover`, `fig4_flythrough` and `ground_static`.
std::map<std::string, Trajectory> bundled_scenarios();

std::string to_string(TrajectoryMode mode);
TrajectoryMode trajectory_mode_from_string(const std::string& s);

}  // namespace aerial_twin::mobility
