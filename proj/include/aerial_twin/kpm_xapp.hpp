#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aerial_twin/e2_codec.hpp"
#include "aerial_twin/types.hpp"

namespace aerial_twin::ric {
class NearRtRic;
}

namespace aerial_twin::xapp {

inline constexpr const char* kSeriesCsvHeader =
    "t_ms,ue_id,horizontal_m,altitude_m,dl_thp_mbps,rb_count,sdu_latency_ms";

struct SeriesPoint {
    uint64_t t_ms = 0;
    uint32_t ue_id = 0;
    double horizontal_m = 0.0;
    double altitude_m = 0.0;
    double dl_thp_mbps = 0.0;
    uint32_t rb_count = 0;
    std::optional<double> sdu_latency_ms;

    bool operator==(const SeriesPoint&) const = default;
};

struct DistanceBin {
    uint32_t ue_id = 0;
    int64_t index = 0;  // covers [index*bin_m, (index+1)*bin_m)
    double lo_m = 0.0;
    double hi_m = 0.0;
    size_t count = 0;
    double mean_thp_mbps = 0.0;
    double mean_rb = 0.0;
    size_t latency_count = 0;
    std::optional<double> mean_latency_ms;
};

SeriesPoint derive_point(const KpmRecord& record, Vec3 gnb_pos);

/// KPM monitoring xApp: turns indications into a per-UE time series.
class KpmXapp {
public:
    explicit KpmXapp(Vec3 gnb_pos) : gnb_pos_(gnb_pos) {}

    /// Marks a subscription as ours; indications for other ids are ignored.
    void own(uint32_t sub_id) { owned_.insert(sub_id); }

    /// Appends one point per record. A repeated (sub_id, seq) is a no-op.
    void on_indication(const e2::Indication& ind);

    /// Drains the RIC delivery queue of `sub_id` until the subscription ends.
    void consume(ric::NearRtRic& ric, uint32_t sub_id);

    const std::vector<SeriesPoint>& series() const { return series_; }
    size_t indications_seen() const { return seen_.size(); }
    size_t duplicates_ignored() const { return duplicates_; }
    size_t unknown_ignored() const { return unknown_; }

private:
    Vec3 gnb_pos_;
    std::set<uint32_t> owned_;
    std::set<std::pair<uint32_t, uint64_t>> seen_;
    std::vector<SeriesPoint> series_;
    size_t duplicates_ = 0;
    size_t unknown_ = 0;
};

/// Mean per (UE, distance bin); bins are half-open and empty bins are omitted.
/// Output is sorted by UE then bin. Throws std::invalid_argument for bin_m <= 0.
std::vector<DistanceBin> bin_by_distance(std::span<const SeriesPoint> series, double bin_m);

std::string format_series_csv(std::span<const SeriesPoint> series);
std::vector<SeriesPoint> parse_series_csv(const std::string& text);

/// Throws std::runtime_error naming the path on I/O failure.
void export_series(std::span<const SeriesPoint> series, const std::filesystem::path& path);
std::vector<SeriesPoint> import_series(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace aerial_twin::xapp
