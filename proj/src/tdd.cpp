#include "aerial_twin/tdd.hpp"

#include <sstream>

namespace aerial_twin::phy {

uint32_t slot_duration_us(const TddConfig& cfg) {
    if (cfg.scs_khz < 15 || cfg.scs_khz % 15 != 0) {
        throw TddConfigError("tdd.scs_khz must be 15 kHz times a power of two");
    }
    const uint32_t mu_factor = cfg.scs_khz / 15;
    if ((mu_factor & (mu_factor - 1)) != 0 || 1000 % mu_factor != 0) {
        throw TddConfigError("tdd.scs_khz must be 15 kHz times a power of two");
    }
    return 1000 / mu_factor;
}

uint32_t slots_per_period(const TddConfig& cfg) {
    const uint32_t slot_us = slot_duration_us(cfg);
    const uint64_t period_us = uint64_t{cfg.period_ms} * 1000;
    if (period_us == 0 || period_us % slot_us != 0) {
        throw TddConfigError("tdd.period_ms must hold a positive whole number of slots");
    }
    return static_cast<uint32_t>(period_us / slot_us);
}

void validate(const TddConfig& cfg) {
    const uint32_t slots = slots_per_period(cfg);
    if (cfg.symbols_per_slot == 0) {
        throw TddConfigError("tdd.symbols_per_slot must be positive");
    }
    if (cfg.n_prb < 1) {
        throw TddConfigError("tdd.n_prb must be at least 1");
    }
    if (cfg.extra_dl_symbols + cfg.extra_ul_symbols > cfg.symbols_per_slot) {
        std::ostringstream os;
        os << "tdd: extra_dl_symbols + extra_ul_symbols (" << cfg.extra_dl_symbols << "+"
           << cfg.extra_ul_symbols << ") exceeds symbols_per_slot (" << cfg.symbols_per_slot << ")";
        throw TddConfigError(os.str());
    }
    // The special slot is only needed when it carries extra symbols.
    const uint32_t special = (cfg.extra_dl_symbols + cfg.extra_ul_symbols > 0) ? 1 : 0;
    if (uint64_t{cfg.full_dl_slots} + cfg.full_ul_slots + special > slots) {
        std::ostringstream os;
        os << "tdd: full_dl_slots + full_ul_slots + special slot (" << cfg.full_dl_slots << "+"
           << cfg.full_ul_slots << "+" << special << ") exceeds slots per period (" << slots << ")";
        throw TddConfigError(os.str());
    }
}

SlotPattern derive_tdd_pattern(const TddConfig& cfg) {
    validate(cfg);
    const uint32_t slots = slots_per_period(cfg);
    const uint32_t n = cfg.symbols_per_slot;

    SlotPattern pattern;
    pattern.symbols_per_slot = n;
    pattern.slots.reserve(slots);
    for (uint32_t i = 0; i < cfg.full_dl_slots; ++i) {
        pattern.slots.push_back({SlotKind::Downlink, n, 0, 0});
    }
    const uint32_t middle = slots - cfg.full_dl_slots - cfg.full_ul_slots;
    for (uint32_t i = 0; i < middle; ++i) {
        if (i == 0) {
            const uint32_t guard = n - cfg.extra_dl_symbols - cfg.extra_ul_symbols;
            pattern.slots.push_back(
                {SlotKind::Special, cfg.extra_dl_symbols, cfg.extra_ul_symbols, guard});
        } else {
            pattern.slots.push_back({SlotKind::Special, 0, 0, n});
        }
    }
    for (uint32_t i = 0; i < cfg.full_ul_slots; ++i) {
        pattern.slots.push_back({SlotKind::Uplink, 0, n, 0});
    }
    return pattern;
}

SymbolCounts symbol_counts(const SlotPattern& pattern) {
    SymbolCounts counts;
    for (const auto& slot : pattern.slots) {
        counts.dl_symbols += slot.dl_symbols;
        counts.ul_symbols += slot.ul_symbols;
    }
    return counts;
}

double ul_dl_ratio(const SymbolCounts& counts) {
    if (counts.dl_symbols == 0) {
        throw std::domain_error("UL/DL ratio undefined: pattern has no DL symbols");
    }
    return static_cast<double>(counts.ul_symbols) / static_cast<double>(counts.dl_symbols);
}

uint32_t dl_data_symbols(const SlotDescriptor& slot, uint32_t overhead_symbols) {
    return slot.dl_symbols > overhead_symbols ? slot.dl_symbols - overhead_symbols : 0;
}

std::string to_string(SlotKind kind) {
    switch (kind) {
        case SlotKind::Downlink: return "DL";
        case SlotKind::Uplink: return "UL";
        case SlotKind::Special: return "S";
    }
    return "?";
}

}  // namespace aerial_twin::phy
