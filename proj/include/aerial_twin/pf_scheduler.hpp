#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aerial_twin/channel.hpp"

namespace aerial_twin::mac {

inline constexpr uint32_t kSubcarriersPerRb = 12;

/// Scenario `sched` section.
struct SchedConfig {
    uint32_t ewma_window_slots = 100;
    double ewma_floor_bps = 1000.0;
    uint32_t overhead_symbols = 2;
    /// Per-UE RB ceiling applied on top of PF; 0 disables it.
    uint32_t max_rb_per_ue = 0;
};

struct SchedUeState {
    uint32_t ue_id = 0;
    uint8_t cqi = 1;
    double ewma_rate_bps = 1000.0;
    uint64_t backlog_bits = 0;
    uint32_t rb_demand = 0;
    /// Per-UE ceiling, 0 = none. Combined with SchedConfig::max_rb_per_ue.
    uint32_t rb_cap = 0;
};

struct Grant {
    uint32_t ue_id = 0;
    uint32_t rb_count = 0;
    uint8_t mcs = 0;
    uint64_t tb_bits = 0;
};

/// Grants in the same order as the scheduler input.
struct Allocation {
    std::vector<Grant> grants;

    uint32_t total_rbs() const;
    const Grant* find(uint32_t ue_id) const;
};

/// Bits one RB carries in a slot with `data_symbols` data symbols.
double bits_per_rb(uint32_t data_symbols, double efficiency);

/// floor(rb_count * 12 * data_symbols * efficiency)
uint64_t tb_bits(uint32_t rb_count, uint32_t data_symbols, double efficiency);

/// Smallest RB count whose transport block holds `backlog_bits`.
uint32_t rb_demand(uint64_t backlog_bits, uint32_t data_symbols, double efficiency);

/// MCS index is the CQI table index.
uint8_t select_mcs(uint8_t cqi);

/// Achievable rate over the EWMA of served rate. Zero demand gives zero.
double pf_coefficient(const SchedUeState& ue, double per_rb_rate_bps, uint32_t n_prb);

/// Bulk greedy allocation: visit UEs by descending coefficient (lower ue_id wins
/// ties) and grant each min(demand, cap, remaining) until RBs run out.
/// A cap of 0 means uncapped.
std::vector<uint32_t> greedy_allocate(std::span<const double> coefficients,
                                      std::span<const uint32_t> demands,
                                      std::span<const uint32_t> ue_ids, uint32_t n_prb,
                                      std::span<const uint32_t> caps = {});

/// One DL slot of PF scheduling. rb_demand in `ues` must already be filled in.
Allocation pf_schedule(std::span<const SchedUeState> ues, uint32_t data_symbols, double slot_s,
                       uint32_t n_prb, const SchedConfig& cfg,
                       const channel::ChannelParams& channel_params);

/// R <- (1 - 1/window) R + (1/window) served_bits/slot_s, floored at ewma_floor_bps.
double update_ewma(double ewma_rate_bps, uint64_t served_bits, uint32_t window_slots, double slot_s,
                   double ewma_floor_bps);

void validate(const SchedConfig& cfg);

}  // namespace aerial_twin::mac
