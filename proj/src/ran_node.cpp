#include "aerial_twin/ran_node.hpp"

#include <cmath>
#include <stdexcept>

namespace aerial_twin::ran {

std::string to_string(AttachType t) { return t == AttachType::Ground ? "ground" : "aerial"; }

AttachType attach_type_from_string(const std::string& s) {
    if (s == "ground") return AttachType::Ground;
    if (s == "aerial") return AttachType::Aerial;
    throw std::invalid_argument("unknown UE type '" + s + "' (expected ground or aerial)");
}

void enqueue_traffic(UeContext& ue, double now_s) {
    const double offered = ue.spec.offered_load_bps;
    const uint64_t sdu = ue.spec.sdu_size_bits;
    const double elapsed = now_s - ue.cbr_origin_s;
    if (!(offered > 0.0) || sdu == 0 || elapsed <= 0.0) return;
    // tolerance keeps exact SDU boundaries from flooring one bit short
    const auto produced = static_cast<uint64_t>(std::floor(offered * elapsed + 1e-6));
    while (ue.cbr_bits + sdu <= produced) {
        ue.cbr_bits += sdu;
        if (ue.spec.rlc_buffer_bits > 0 && ue.queued_bits + sdu > ue.spec.rlc_buffer_bits) {
            ue.counters.dropped_bits += sdu;
            continue;
        }
        ue.rlc_queue.push_back({ue.cbr_origin_s + static_cast<double>(ue.cbr_bits) / offered, sdu});
        ue.queued_bits += sdu;
        ue.counters.enqueued_bits += sdu;
    }
}

RanNode::RanNode(NodeConfig cfg, std::vector<UeSpec> ues,
                 std::vector<mobility::Trajectory> trajectories)
    : cfg_(std::move(cfg)),
      pattern_(phy::derive_tdd_pattern(cfg_.tdd)),
      slot_us_(phy::slot_duration_us(cfg_.tdd)),
      trajectories_(std::move(trajectories)),
      los_rng_(cfg_.seed, "los"),
      shadowing_rng_(cfg_.seed, "shadowing") {
    mac::validate(cfg_.sched);
    channel::validate(cfg_.channel);
    channel::validate(cfg_.link_budget);
    if (cfg_.los_resample_ms == 0) throw std::invalid_argument("los_resample_ms must be > 0");

    ues_.reserve(ues.size());
    for (auto& spec : ues) {
        UeContext ctx;
        ctx.spec = std::move(spec);
        for (const auto& t : trajectories_) {
            if (t.name == ctx.spec.trajectory) ctx.trajectory = &t;
        }
        if (ctx.trajectory == nullptr) {
            throw std::invalid_argument("UE " + std::to_string(ctx.spec.id) +
                                        " references unknown trajectory '" + ctx.spec.trajectory + "'");
        }
        for (const auto& other : ues_) {
            if (other.spec.id == ctx.spec.id) {
                throw std::invalid_argument("duplicate UE id " + std::to_string(ctx.spec.id));
            }
        }
        ctx.sched.ue_id = ctx.spec.id;
        ctx.sched.ewma_rate_bps = cfg_.sched.ewma_floor_bps;
        ues_.push_back(std::move(ctx));
    }
}

const UeContext& RanNode::ue(uint32_t ue_id) const {
    for (const auto& u : ues_) {
        if (u.spec.id == ue_id) return u;
    }
    throw std::out_of_range("no UE with id " + std::to_string(ue_id));
}

UeContext& RanNode::mutable_ue(uint32_t ue_id) {
    return const_cast<UeContext&>(static_cast<const RanNode&>(*this).ue(ue_id));
}

void RanNode::set_rb_cap(uint32_t ue_id, uint32_t cap) { mutable_ue(ue_id).sched.rb_cap = cap; }

void RanNode::set_offered_load(uint32_t ue_id, double bps) {
    auto& u = mutable_ue(ue_id);
    // the partially produced SDU is discarded; the new rate starts now
    const double now_s = static_cast<double>(now_us_) * 1e-6;
    enqueue_traffic(u, now_s);
    u.spec.offered_load_bps = bps;
    u.cbr_origin_s = now_s;
    u.cbr_bits = 0;
}

void RanNode::refresh_channel(UeContext& ue, double now_s, bool resample) {
    ue.position = mobility::position_at(*ue.trajectory, now_s);
    if (resample) {
        const auto g = channel::geometry(ue.position, cfg_.gnb_pos);
        ue.los = channel::sample_los(channel::los_probability(g.elevation_deg, cfg_.channel), los_rng_);
        ue.shadowing_db = channel::draw_shadowing_db(cfg_.channel, shadowing_rng_);
    }
    ue.channel = channel::evaluate(ue.position, cfg_.gnb_pos, cfg_.link_budget, cfg_.channel, ue.los,
                                   ue.shadowing_db);
    ue.sched.cqi = ue.channel.cqi;
}

SlotResult RanNode::step() {
    const double now_s = static_cast<double>(now_us_) * 1e-6;
    const double slot_s = static_cast<double>(slot_us_) * 1e-6;
    const bool resample = now_us_ % (uint64_t{cfg_.los_resample_ms} * 1000) == 0;

    SlotResult result;
    result.slot_index = slot_index_;
    const auto& slot = pattern_.slots[slot_index_ % pattern_.slots.size()];
    result.kind = slot.kind;
    result.data_symbols = phy::dl_data_symbols(slot, cfg_.sched.overhead_symbols);

    std::vector<mac::SchedUeState> states;
    states.reserve(ues_.size());
    for (auto& ue : ues_) {
        refresh_channel(ue, now_s, resample);
        enqueue_traffic(ue, now_s);
        ue.sched.backlog_bits = ue.queued_bits;
        const double eff = channel::cqi_to_efficiency(ue.sched.cqi, cfg_.channel);
        ue.sched.rb_demand =
            result.data_symbols > 0 ? mac::rb_demand(ue.queued_bits, result.data_symbols, eff) : 0;
        states.push_back(ue.sched);
        result.ues.push_back({ue.spec.id, 0, 0, {}});
    }

    if (result.data_symbols > 0) {
        const auto alloc = mac::pf_schedule(states, result.data_symbols, slot_s, cfg_.tdd.n_prb,
                                            cfg_.sched, cfg_.channel);
        const double service_end_s = now_s + slot_s;
        for (size_t i = 0; i < ues_.size(); ++i) {
            auto& ue = ues_[i];
            auto& out = result.ues[i];
            const auto& grant = alloc.grants[i];
            uint64_t budget = std::min<uint64_t>(grant.tb_bits, ue.queued_bits);
            uint64_t served = 0;
            while (budget > 0 && !ue.rlc_queue.empty()) {
                auto& head = ue.rlc_queue.front();
                const uint64_t take = std::min(budget, head.remaining_bits);
                head.remaining_bits -= take;
                budget -= take;
                served += take;
                if (head.remaining_bits == 0) {
                    out.completed_sdu_latencies_s.push_back(service_end_s - head.enqueue_time_s);
                    ue.rlc_queue.pop_front();
                }
            }
            ue.queued_bits -= served;
            out.served_bits = served;
            out.rb_count = served > 0 ? grant.rb_count : 0;

            ue.counters.served_bits += served;
            ue.counters.rb_total += out.rb_count;
            for (double lat : out.completed_sdu_latencies_s) {
                ue.counters.latency_sum_us += lat * 1e6;
                ++ue.counters.latency_count;
            }
            ue.sched.ewma_rate_bps = mac::update_ewma(ue.sched.ewma_rate_bps, served,
                                                      cfg_.sched.ewma_window_slots, slot_s,
                                                      cfg_.sched.ewma_floor_bps);
        }
    }

    now_us_ += slot_us_;
    ++slot_index_;
    return result;
}

KpmWindow RanNode::open_window() const {
    KpmWindow w;
    w.start_us = now_us_;
    for (const auto& ue : ues_) w.start.push_back(ue.counters);
    return w;
}

std::vector<KpmRecord> RanNode::collect_kpm(KpmWindow& window) const {
    std::vector<KpmRecord> records;
    const uint64_t span_us = now_us_ - window.start_us;
    for (size_t i = 0; i < ues_.size(); ++i) {
        const auto& ue = ues_[i];
        const UeCounters before = i < window.start.size() ? window.start[i] : UeCounters{};
        KpmRecord r;
        r.t_ms = now_us_ / 1000;
        r.ue_id = ue.spec.id;
        const uint64_t served = ue.counters.served_bits - before.served_bits;
        // bits per millisecond == kbit/s
        r.dl_thp_kbps = span_us > 0 ? static_cast<uint32_t>(served * 1000 / span_us) : 0;
        r.rb_count = static_cast<uint32_t>(ue.counters.rb_total - before.rb_total);
        const uint64_t completed = ue.counters.latency_count - before.latency_count;
        if (completed > 0) {
            const double mean = (ue.counters.latency_sum_us - before.latency_sum_us) /
                                static_cast<double>(completed);
            r.sdu_latency_us = static_cast<uint32_t>(std::llround(std::max(0.0, mean)));
        }
        const Vec3 pos = mobility::position_at(*ue.trajectory, static_cast<double>(now_us_) * 1e-6);
        r.pos_x_cm = static_cast<int32_t>(std::llround(pos.x * 100.0));
        r.pos_y_cm = static_cast<int32_t>(std::llround(pos.y * 100.0));
        r.pos_z_cm = static_cast<int32_t>(std::llround(pos.z * 100.0));
        r.cqi = ue.sched.cqi;
        r.mcs = mac::select_mcs(ue.sched.cqi);
        records.push_back(r);
    }
    window = open_window();
    return records;
}

}  // namespace aerial_twin::ran
