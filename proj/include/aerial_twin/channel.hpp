#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aerial_twin/rng.hpp"
#include "aerial_twin/types.hpp"

namespace aerial_twin::channel {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kThermalNoiseDbmPerHz = -174.0;

/// Default CQI -> spectral efficiency table (b/s/Hz), index 0 is CQI 1.
inline constexpr std::array<double, 15> kDefaultCqiEfficiency = {
    0.15, 0.23, 0.38, 0.60, 0.88, 1.18, 1.48, 1.91, 2.41, 2.73, 3.32, 3.90, 4.52, 5.12, 5.55};

struct LinkBudget {
    double tx_power_dbm = -27.0;
    double tx_gain_db = 0.0;
    double rx_gain_db = 0.0;
    double noise_figure_db = 7.0;
    double bandwidth_hz = 40e6;
    double carrier_freq_hz = 3.5e9;
};

/// Point of the optional antenna pattern: extra gain at a given elevation.
struct AntennaGainPoint {
    double elevation_deg = 0.0;
    double gain_db = 0.0;
};

/// Tunable constants of the air-to-ground model (scenario `channel` section).
struct ChannelParams {
    double p0 = 0.3;
    double theta_sat_deg = 45.0;
    double los_exponent = 2.0;
    double nlos_exponent = 3.5;
    double d_ref_m = 1.0;
    std::array<double, 15> cqi_table = kDefaultCqiEfficiency;
    double snr_min_db = -6.0;
    double cqi_step_db = 2.0;
    bool shadowing = false;
    double shadowing_sigma_db = 4.0;
    /// Piecewise-linear in elevation, sorted ascending. Empty means flat (0 dB).
    std::vector<AntennaGainPoint> antenna_gain;
};

struct Geometry {
    double distance_3d_m = 0.0;
    double horizontal_m = 0.0;
    double elevation_deg = 0.0;
};

struct ChannelState {
    double distance_3d_m = 0.0;
    double elevation_deg = 0.0;
    bool los = false;
    double path_loss_db = 0.0;
    double snr_db = 0.0;
    uint8_t cqi = 1;
};

/// Elevation of the UE as seen from the gNB antenna. Rejects coincident positions.
Geometry geometry(Vec3 ue_pos, Vec3 gnb_pos);

double los_probability(double elevation_deg, const ChannelParams& params = {});
bool sample_los(double probability, RngStream& rng);

/// Log-distance path loss anchored at the free-space loss at d_ref.
/// Throws std::domain_error below d_ref.
double path_loss_db(double distance_3d_m, double carrier_freq_hz, bool los,
                    const ChannelParams& params = {});

double noise_floor_dbm(const LinkBudget& budget);
double snr_db(const LinkBudget& budget, double path_loss_db);

uint8_t snr_to_cqi(double snr_db, const ChannelParams& params = {});
double cqi_to_efficiency(uint8_t cqi, const ChannelParams& params = {});

double antenna_gain_db(double elevation_deg, const ChannelParams& params);

void validate(const LinkBudget& budget);
void validate(const ChannelParams& params);

/// Lognormal shadowing term in dB; 0 when shadowing is disabled.
double draw_shadowing_db(const ChannelParams& params, RngStream& rng);

/// Full per-UE evaluation. LoS state and shadowing are drawn by the caller,
/// once per resampling period.
ChannelState evaluate(Vec3 ue_pos, Vec3 gnb_pos, const LinkBudget& budget,
                      const ChannelParams& params, bool los, double shadowing_db = 0.0);

}  // namespace aerial_twin::channel
