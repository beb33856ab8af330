#pragma once

#include <cstdint>
#include <optional>

namespace aerial_twin {

/// Function id the gNB advertises for the KPM monitoring service.
inline constexpr uint16_t kKpmFunctionId = 2;

/// One telemetry row for one UE over one report window.
struct KpmRecord {
    uint64_t t_ms = 0;            // window end, simulation time
    uint32_t ue_id = 0;
    uint32_t dl_thp_kbps = 0;     // served bits / window length
    uint32_t rb_count = 0;        // RBs granted over the window
    std::optional<uint32_t> sdu_latency_us;  // mean over SDUs completed in the window
    int32_t pos_x_cm = 0;
    int32_t pos_y_cm = 0;
    int32_t pos_z_cm = 0;
    uint8_t cqi = 1;
    uint8_t mcs = 1;

    bool operator==(const KpmRecord&) const = default;
};

}  // namespace aerial_twin
