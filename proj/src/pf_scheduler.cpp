#include "aerial_twin/pf_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aerial_twin::mac {

uint32_t Allocation::total_rbs() const {
    uint32_t total = 0;
    for (const auto& g : grants) total += g.rb_count;
    return total;
}

const Grant* Allocation::find(uint32_t ue_id) const {
    for (const auto& g : grants) {
        if (g.ue_id == ue_id) return &g;
    }
    return nullptr;
}

double bits_per_rb(uint32_t data_symbols, double efficiency) {
    return static_cast<double>(kSubcarriersPerRb) * data_symbols * efficiency;
}

uint64_t tb_bits(uint32_t rb_count, uint32_t data_symbols, double efficiency) {
    const double bits = static_cast<double>(rb_count) * bits_per_rb(data_symbols, efficiency);
    // products that are whole numbers in exact arithmetic must not round down
    return static_cast<uint64_t>(std::floor(bits + 1e-9));
}

uint32_t rb_demand(uint64_t backlog_bits, uint32_t data_symbols, double efficiency) {
    if (backlog_bits == 0) return 0;
    const double per_rb = bits_per_rb(data_symbols, efficiency);
    if (per_rb <= 0.0) return 0;
    const double raw = std::ceil(static_cast<double>(backlog_bits) / per_rb);
    auto demand = static_cast<uint64_t>(std::max(1.0, std::min(raw, 4.0e9)));
    while (demand > 1 && tb_bits(static_cast<uint32_t>(demand - 1), data_symbols, efficiency) >= backlog_bits) {
        --demand;
    }
    while (tb_bits(static_cast<uint32_t>(demand), data_symbols, efficiency) < backlog_bits) {
        ++demand;
    }
    return static_cast<uint32_t>(demand);
}

uint8_t select_mcs(uint8_t cqi) { return static_cast<uint8_t>(std::clamp<int>(cqi, 1, 15)); }

double pf_coefficient(const SchedUeState& ue, double per_rb_rate_bps, uint32_t n_prb) {
    const double achievable = per_rb_rate_bps * static_cast<double>(std::min(ue.rb_demand, n_prb));
    return achievable / ue.ewma_rate_bps;
}

std::vector<uint32_t> greedy_allocate(std::span<const double> coefficients,
                                      std::span<const uint32_t> demands,
                                      std::span<const uint32_t> ue_ids, uint32_t n_prb,
                                      std::span<const uint32_t> caps) {
    const size_t n = coefficients.size();
    if (demands.size() != n || ue_ids.size() != n || (!caps.empty() && caps.size() != n)) {
        throw std::invalid_argument("greedy_allocate: input spans differ in length");
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (coefficients[a] != coefficients[b]) return coefficients[a] > coefficients[b];
        return ue_ids[a] < ue_ids[b];
    });

    std::vector<uint32_t> grants(n, 0);
    uint32_t remaining = n_prb;
    for (size_t idx : order) {
        if (remaining == 0) break;
        uint32_t want = demands[idx];
        if (!caps.empty() && caps[idx] > 0) want = std::min(want, caps[idx]);
        const uint32_t granted = std::min(want, remaining);
        grants[idx] = granted;
        remaining -= granted;
    }
    return grants;
}

Allocation pf_schedule(std::span<const SchedUeState> ues, uint32_t data_symbols, double slot_s,
                       uint32_t n_prb, const SchedConfig& cfg,
                       const channel::ChannelParams& channel_params) {
    const size_t n = ues.size();
    std::vector<double> coeffs(n);
    std::vector<uint32_t> demands(n);
    std::vector<uint32_t> ids(n);
    std::vector<uint32_t> caps(n);
    std::vector<double> efficiency(n);
    for (size_t i = 0; i < n; ++i) {
        const auto& ue = ues[i];
        efficiency[i] = channel::cqi_to_efficiency(ue.cqi, channel_params);
        const double per_rb_rate = bits_per_rb(data_symbols, efficiency[i]) / slot_s;
        coeffs[i] = pf_coefficient(ue, per_rb_rate, n_prb);
        demands[i] = ue.backlog_bits > 0 ? ue.rb_demand : 0;
        ids[i] = ue.ue_id;
        uint32_t cap = cfg.max_rb_per_ue;
        if (ue.rb_cap > 0) cap = cap > 0 ? std::min(cap, ue.rb_cap) : ue.rb_cap;
        caps[i] = cap;
    }
    const auto rbs = greedy_allocate(coeffs, demands, ids, n_prb, caps);

    Allocation alloc;
    alloc.grants.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Grant g;
        g.ue_id = ues[i].ue_id;
        g.rb_count = rbs[i];
        g.mcs = select_mcs(ues[i].cqi);
        g.tb_bits = tb_bits(rbs[i], data_symbols, efficiency[i]);
        alloc.grants.push_back(g);
    }
    return alloc;
}

double update_ewma(double ewma_rate_bps, uint64_t served_bits, uint32_t window_slots, double slot_s,
                   double ewma_floor_bps) {
    const double alpha = 1.0 / static_cast<double>(std::max<uint32_t>(window_slots, 1));
    const double sample = static_cast<double>(served_bits) / slot_s;
    const double next = (1.0 - alpha) * ewma_rate_bps + alpha * sample;
    return std::max(next, ewma_floor_bps);
}

void validate(const SchedConfig& cfg) {
    if (cfg.ewma_window_slots < 1) throw std::invalid_argument("sched.ewma_window_slots must be >= 1");
    if (!(cfg.ewma_floor_bps > 0.0)) throw std::invalid_argument("sched.ewma_floor_bps must be > 0");
}

}  // namespace aerial_twin::mac
