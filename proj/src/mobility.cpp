#include "aerial_twin/mobility.hpp"

#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace aerial_twin::mobility {

void validate(const Trajectory& traj) {
    if (traj.waypoints.empty()) {
        throw std::invalid_argument("trajectory '" + traj.name + "' has no waypoints");
    }
    for (const auto& wp : traj.waypoints) {
        if (!(wp.hold_s >= 0.0)) {
            throw std::invalid_argument("trajectory '" + traj.name + "': hold_s must be >= 0");
        }
        if (!std::isfinite(wp.pos.x) || !std::isfinite(wp.pos.y) || !std::isfinite(wp.pos.z)) {
            throw std::invalid_argument("trajectory '" + traj.name + "': non-finite waypoint");
        }
    }
    if (traj.mode == TrajectoryMode::ConstantSpeedPath && !(traj.speed_mps > 0.0)) {
        throw std::invalid_argument("trajectory '" + traj.name + "': speed_mps must be > 0 in path mode");
    }
    if (traj.speed_mps < 0.0) {
        throw std::invalid_argument("trajectory '" + traj.name + "': speed_mps must be >= 0");
    }
    if (traj.mode == TrajectoryMode::HoverSequence && traj.speed_mps == 0.0 &&
        traj.waypoints.size() > 1) {
        spdlog::warn("trajectory '{}': no transit speed, hover holds switch instantaneously",
                     traj.name);
    }
}

Vec3 position_at(const Trajectory& traj, double t_s) {
    const auto& wps = traj.waypoints;
    if (wps.empty()) return {};
    if (traj.mode == TrajectoryMode::Static || wps.size() == 1) return wps.front().pos;

    double t = std::max(0.0, t_s);
    for (size_t i = 0; i < wps.size(); ++i) {
        if (t < wps[i].hold_s) return wps[i].pos;
        t -= wps[i].hold_s;
        if (i + 1 == wps.size()) break;
        if (traj.speed_mps <= 0.0) continue;
        const Vec3 leg = wps[i + 1].pos - wps[i].pos;
        const double leg_time = norm(leg) / traj.speed_mps;
        if (t < leg_time) return wps[i].pos + leg * (t / leg_time);
        t -= leg_time;
    }
    return wps.back().pos;
}

double duration_s(const Trajectory& traj) {
    const auto& wps = traj.waypoints;
    double total = 0.0;
    for (size_t i = 0; i < wps.size(); ++i) {
        total += wps[i].hold_s;
        if (i + 1 < wps.size() && traj.speed_mps > 0.0 && traj.mode != TrajectoryMode::Static) {
            total += norm(wps[i + 1].pos - wps[i].pos) / traj.speed_mps;
        }
    }
    return total;
}

std::map<std::string, Trajectory> bundled_scenarios() {
    std::map<std::string, Trajectory> out;

    // Holds named in the measurement campaign (15/20 m at 5 m, 30/50 m at 10 m);
    // the 15 m and 20 m altitude holds extend the climb further out.
    Trajectory hover;
    hover.name = "fig3_hover";
    hover.mode = TrajectoryMode::HoverSequence;
    hover.speed_mps = kFig3TransitSpeedMps;
    hover.waypoints = {
        {{15.0, 0.0, 5.0}, kFig3HoldS},  {{20.0, 0.0, 5.0}, kFig3HoldS},
        {{30.0, 0.0, 10.0}, kFig3HoldS}, {{50.0, 0.0, 10.0}, kFig3HoldS},
        {{70.0, 0.0, 15.0}, kFig3HoldS}, {{90.0, 0.0, 20.0}, kFig3HoldS},
    };
    out.emplace(hover.name, hover);

    Trajectory fly;
    fly.name = "fig4_flythrough";
    fly.mode = TrajectoryMode::ConstantSpeedPath;
    fly.speed_mps = kFig4SpeedMps;
    fly.waypoints = {{{0.0, 0.0, kFig4AltitudeM}, 0.0}, {{300.0, 0.0, kFig4AltitudeM}, 0.0}};
    out.emplace(fly.name, fly);

    Trajectory ground;
    ground.name = "ground_static";
    ground.mode = TrajectoryMode::Static;
    ground.waypoints = {{{20.0, 0.0, 1.0}, 0.0}};
    out.emplace(ground.name, ground);

    return out;
}

std::string to_string(TrajectoryMode mode) {
    switch (mode) {
        case TrajectoryMode::HoverSequence: return "hover_sequence";
        case TrajectoryMode::ConstantSpeedPath: return "constant_speed_path";
        case TrajectoryMode::Static: return "static";
    }
    return "static";
}

TrajectoryMode trajectory_mode_from_string(const std::string& s) {
    if (s == "hover_sequence") return TrajectoryMode::HoverSequence;
    if (s == "constant_speed_path") return TrajectoryMode::ConstantSpeedPath;
    if (s == "static") return TrajectoryMode::Static;
    throw std::invalid_argument("unknown trajectory mode '" + s + "'");
}

}  // namespace aerial_twin::mobility
