#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aerial_twin/channel.hpp"
#include "aerial_twin/kpm_xapp.hpp"
#include "aerial_twin/pf_scheduler.hpp"
#include "aerial_twin/tdd.hpp"

namespace aerial_twin::datagen {

struct CurvePoint {
    double horizontal_m = 0.0;
    double throughput_mbps = 0.0;
    bool operator==(const CurvePoint&) const = default;
};

struct MeasuredCurve {
    double power_dbm = 0.0;
    double offered_load_mbps = 0.0;
    std::vector<CurvePoint> points;
    bool operator==(const MeasuredCurve&) const = default;
};

/// Raised when a capped point is asked for an SNR; the cap hides it.
class CappedPointError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct DatagenConfig {
    channel::ChannelParams channel;
    /// Throughput (bit/s) per unit of spectral efficiency with the whole
    /// carrier: n_prb * 12 * DL data symbols per second.
    double capacity_bps_per_eff = 0.0;
    /// Fraction of the carrier the UE gets.
    double rb_share = 1.0;
    /// Points within this fraction of the offered load count as capped.
    double cap_tolerance = 0.02;
};

DatagenConfig make_config(const phy::TddConfig& tdd, const mac::SchedConfig& sched,
                          const channel::ChannelParams& channel);

/// Continuous efficiency-vs-SNR curve through the CQI table: one knot at the
/// centre of each CQI step, linear between knots, plus a zero-efficiency knot
/// half a step below snr_min.
class RateModel {
public:
    explicit RateModel(const channel::ChannelParams& params);

    double efficiency(double snr_db) const;
    /// Inverse of efficiency(); clamps to the end knots outside the table.
    double snr_for_efficiency(double eff) const;

    double min_snr_db() const { return snr_.front(); }
    double max_snr_db() const { return snr_.back(); }

private:
    std::array<double, 16> snr_{};
    std::array<double, 16> eff_{};
};

bool is_capped(double throughput_mbps, double offered_load_mbps, const DatagenConfig& cfg);

/// Throws CappedPointError for capped points.
double invert_rate_to_snr(const CurvePoint& point, double offered_load_mbps, const DatagenConfig& cfg);

/// Throughput the link-budget model predicts at `snr_db`, capped at the offered load.
double rate_at_snr(double snr_db, double offered_load_mbps, const DatagenConfig& cfg);

MeasuredCurve power_shift_curve(const MeasuredCurve& curve, double new_power_dbm,
                                const DatagenConfig& cfg);

struct Score {
    double median_rel_err = 0.0;
    double max_rel_err = 0.0;
    double fraction_within_10pct = 0.0;
    size_t points = 0;
};

/// Compares `gen` against `oracle` at the oracle's uncapped distances inside
/// the shared range; `gen` is linearly interpolated onto them. Throws
/// std::invalid_argument when the ranges do not overlap or nothing is comparable.
Score score_generated(const MeasuredCurve& gen, const MeasuredCurve& oracle, const DatagenConfig& cfg);

/// Throws std::invalid_argument if distances are not strictly increasing or a
/// throughput lies outside [0, offered_load].
void validate(const MeasuredCurve& curve);

/// One point per distance bin of `ue_id`, at the bin centre; throughput is the
/// bin mean clamped to the offered load.
MeasuredCurve curve_from_series(std::span<const xapp::SeriesPoint> series, uint32_t ue_id, double bin_m,
                                double power_dbm, double offered_load_mbps);

std::string format_curve_csv(const MeasuredCurve& curve);
MeasuredCurve parse_curve_csv(const std::string& text);
void write_curve(const MeasuredCurve& curve, const std::filesystem::path& path);
MeasuredCurve read_curve(const std::filesystem::path& path);

}  // namespace aerial_twin::datagen
