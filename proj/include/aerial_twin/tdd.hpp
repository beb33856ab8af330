#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace aerial_twin::phy {

/// TDD numerology for one DL/UL period. Field names match the scenario `tdd` section.
struct TddConfig {
    uint32_t scs_khz = 30;
    uint32_t period_ms = 5;
    uint32_t full_dl_slots = 7;
    uint32_t extra_dl_symbols = 6;
    uint32_t full_ul_slots = 2;
    uint32_t extra_ul_symbols = 4;
    uint32_t n_prb = 106;
    uint32_t symbols_per_slot = 14;

    bool operator==(const TddConfig&) const = default;
};

/// Thrown when a TddConfig violates one of its invariants; what() names the constraint.
class TddConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class SlotKind : uint8_t { Downlink, Uplink, Special };

struct SlotDescriptor {
    SlotKind kind = SlotKind::Downlink;
    uint32_t dl_symbols = 0;
    uint32_t ul_symbols = 0;
    uint32_t guard_symbols = 0;

    bool operator==(const SlotDescriptor&) const = default;
};

struct SlotPattern {
    std::vector<SlotDescriptor> slots;
    uint32_t symbols_per_slot = 14;

    bool operator==(const SlotPattern&) const = default;
};

struct SymbolCounts {
    uint32_t dl_symbols = 0;
    uint32_t ul_symbols = 0;
};

/// Slot duration in microseconds for the configured subcarrier spacing.
/// Throws TddConfigError if scs_khz is not 15·2^mu.
uint32_t slot_duration_us(const TddConfig& cfg);

uint32_t slots_per_period(const TddConfig& cfg);

/// Checks every TddConfig invariant, throwing TddConfigError on the first violation.
void validate(const TddConfig& cfg);

/// DL slots first, then one special slot carrying the extra symbols, then UL slots.
/// Slots left over between the special slot and the UL block are emitted as
/// special slots with all symbols guarded.
SlotPattern derive_tdd_pattern(const TddConfig& cfg);

SymbolCounts symbol_counts(const SlotPattern& pattern);

/// UL/DL symbol ratio. Throws std::domain_error when the pattern has no DL symbols.
double ul_dl_ratio(const SymbolCounts& counts);

/// DL symbols left for data after control/reference overhead.
uint32_t dl_data_symbols(const SlotDescriptor& slot, uint32_t overhead_symbols);

std::string to_string(SlotKind kind);

}  // namespace aerial_twin::phy
