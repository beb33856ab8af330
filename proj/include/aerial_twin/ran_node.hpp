#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aerial_twin/channel.hpp"
#include "aerial_twin/kpm.hpp"
#include "aerial_twin/mobility.hpp"
#include "aerial_twin/pf_scheduler.hpp"
#include "aerial_twin/rng.hpp"
#include "aerial_twin/tdd.hpp"

namespace aerial_twin::ran {

enum class AttachType { Ground, Aerial };

std::string to_string(AttachType t);
AttachType attach_type_from_string(const std::string& s);

struct UeSpec {
    uint32_t id = 0;
    AttachType type = AttachType::Aerial;
    double offered_load_bps = 0.0;
    uint64_t sdu_size_bits = 12'000;
    std::string trajectory;
    /// RLC transmit buffer size; SDUs that do not fit are dropped on arrival.
    /// 0 means unbounded.
    uint64_t rlc_buffer_bits = 0;
};

struct RlcSdu {
    double enqueue_time_s = 0.0;
    uint64_t remaining_bits = 0;
};

/// Running totals since attach; report windows are differences of two snapshots.
struct UeCounters {
    uint64_t enqueued_bits = 0;
    uint64_t dropped_bits = 0;
    uint64_t served_bits = 0;
    uint64_t rb_total = 0;
    double latency_sum_us = 0.0;
    uint64_t latency_count = 0;
};

struct UeContext {
    UeSpec spec;
    const mobility::Trajectory* trajectory = nullptr;
    std::deque<RlcSdu> rlc_queue;
    uint64_t queued_bits = 0;
    /// CBR source state: bits produced since cbr_origin_s at the current rate.
    double cbr_origin_s = 0.0;
    uint64_t cbr_bits = 0;
    mac::SchedUeState sched;
    UeCounters counters;
    bool los = true;
    double shadowing_db = 0.0;
    channel::ChannelState channel;
    Vec3 position;
};

struct NodeConfig {
    phy::TddConfig tdd;
    mac::SchedConfig sched;
    channel::ChannelParams channel;
    channel::LinkBudget link_budget;
    Vec3 gnb_pos{0.0, 0.0, mobility::kGnbAntennaHeightM};
    /// LoS state and shadowing are redrawn on this period.
    uint32_t los_resample_ms = 100;
    uint64_t seed = 1;
};

struct SlotUeResult {
    uint32_t ue_id = 0;
    uint64_t served_bits = 0;
    uint32_t rb_count = 0;
    std::vector<double> completed_sdu_latencies_s;
};

struct SlotResult {
    uint64_t slot_index = 0;
    phy::SlotKind kind = phy::SlotKind::Downlink;
    uint32_t data_symbols = 0;
    std::vector<SlotUeResult> ues;
};

/// Snapshot that opens a KPM report window.
struct KpmWindow {
    uint64_t start_us = 0;
    std::vector<UeCounters> start;
};

/// Produces SDUs so that produced bits track offered_load·now within one SDU.
/// SDUs that overflow a bounded RLC buffer are counted as dropped, not enqueued.
/// Each SDU is stamped with the instant the source finished producing it.
void enqueue_traffic(UeContext& ue, double now_s);

/// Emulated gNB. Owns the slot clock; every call to step() advances one slot.
class RanNode {
public:
    RanNode(NodeConfig cfg, std::vector<UeSpec> ues, std::vector<mobility::Trajectory> trajectories);

    SlotResult step();

    uint64_t now_us() const { return now_us_; }
    uint32_t slot_us() const { return slot_us_; }
    uint64_t slot_index() const { return slot_index_; }
    const phy::SlotPattern& pattern() const { return pattern_; }
    const NodeConfig& config() const { return cfg_; }

    const std::vector<UeContext>& ues() const { return ues_; }
    const UeContext& ue(uint32_t ue_id) const;

    /// Caps the RBs the scheduler may grant this UE per slot (0 removes the cap).
    void set_rb_cap(uint32_t ue_id, uint32_t cap);
    void set_offered_load(uint32_t ue_id, double bps);

    KpmWindow open_window() const;

    /// One record per UE covering [window.start_us, now). Re-opens the window at now.
    std::vector<KpmRecord> collect_kpm(KpmWindow& window) const;

private:
    UeContext& mutable_ue(uint32_t ue_id);
    void refresh_channel(UeContext& ue, double now_s, bool resample);

    NodeConfig cfg_;
    phy::SlotPattern pattern_;
    uint32_t slot_us_ = 500;
    std::vector<mobility::Trajectory> trajectories_;
    std::vector<UeContext> ues_;
    RngStream los_rng_;
    RngStream shadowing_rng_;
    uint64_t now_us_ = 0;
    uint64_t slot_index_ = 0;
};

}  // namespace aerial_twin::ran
