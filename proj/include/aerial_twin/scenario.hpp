#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aerial_twin/ran_node.hpp"

namespace aerial_twin::expcli {

/// Bad scenario file; what() starts with the offending key path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TransportKind { InProc, Socket };

std::string to_string(TransportKind kind);
TransportKind transport_kind_from_string(const std::string& s);

struct XappConfig {
    uint32_t report_period_ms = 100;
    double bin_m = 10.0;
};

struct TransportConfig {
    TransportKind kind = TransportKind::InProc;
    /// Listen address for the RIC in socket mode; port 0 picks a free one.
    std::string address = "127.0.0.1:0";
};

/// Timed change applied at the first slot boundary at or after t_s.
struct ScenarioEvent {
    double t_s = 0.0;
    uint32_t ue_id = 0;
    std::optional<uint32_t> rb_cap;
    std::optional<double> offered_load_bps;
};

struct Scenario {
    std::string name;
    uint64_t seed = 1;
    double duration_s = 10.0;
    phy::TddConfig tdd;
    channel::ChannelParams channel;
    uint32_t los_resample_ms = 100;
    mac::SchedConfig sched;
    channel::LinkBudget link_budget;
    Vec3 gnb_pos{0.0, 0.0, mobility::kGnbAntennaHeightM};
    std::vector<ran::UeSpec> ues;
    std::vector<mobility::Trajectory> trajectories;
    std::vector<ScenarioEvent> events;
    XappConfig xapp;
    TransportConfig transport;

    ran::NodeConfig node_config() const;
};

/// Strict JSON parse: unknown keys, wrong types, missing required sections,
/// dangling trajectory references and invariant violations all throw ConfigError.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Checks cross-field invariants of an already built Scenario.
void validate(const Scenario& scenario);

}  // namespace aerial_twin::expcli
