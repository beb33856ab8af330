#include "aerial_twin/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace aerial_twin::channel {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}

Geometry geometry(Vec3 ue_pos, Vec3 gnb_pos) {
    const Vec3 d = ue_pos - gnb_pos;
    if (!std::isfinite(d.x) || !std::isfinite(d.y) || !std::isfinite(d.z)) {
        throw std::domain_error("geometry: non-finite position");
    }
    Geometry g;
    g.horizontal_m = std::hypot(d.x, d.y);
    g.distance_3d_m = norm(d);
    if (g.distance_3d_m <= 0.0) {
        throw std::domain_error("geometry: UE and gNB positions coincide");
    }
    g.elevation_deg = std::atan2(d.z, g.horizontal_m) * kRadToDeg;
    return g;
}

double los_probability(double elevation_deg, const ChannelParams& params) {
    const double rise = std::max(0.0, elevation_deg) / params.theta_sat_deg;
    return std::clamp(params.p0 + (1.0 - params.p0) * rise, params.p0, 1.0);
}

bool sample_los(double probability, RngStream& rng) { return rng.bernoulli(probability); }

double path_loss_db(double distance_3d_m, double carrier_freq_hz, bool los,
                    const ChannelParams& params) {
    if (!(distance_3d_m >= params.d_ref_m)) {
        throw std::domain_error("path_loss_db: distance below reference distance");
    }
    const double pl_ref =
        20.0 * std::log10(4.0 * std::numbers::pi * carrier_freq_hz * params.d_ref_m / kSpeedOfLight);
    const double exponent = los ? params.los_exponent : params.nlos_exponent;
    return pl_ref + 10.0 * exponent * std::log10(distance_3d_m / params.d_ref_m);
}

double noise_floor_dbm(const LinkBudget& budget) {
    return kThermalNoiseDbmPerHz + 10.0 * std::log10(budget.bandwidth_hz) + budget.noise_figure_db;
}

double snr_db(const LinkBudget& budget, double path_loss_db) {
    return budget.tx_power_dbm + budget.tx_gain_db + budget.rx_gain_db - path_loss_db -
           noise_floor_dbm(budget);
}

uint8_t snr_to_cqi(double snr_db, const ChannelParams& params) {
    const double steps = std::floor((snr_db - params.snr_min_db) / params.cqi_step_db);
    return static_cast<uint8_t>(std::clamp(1.0 + steps, 1.0, 15.0));
}

double cqi_to_efficiency(uint8_t cqi, const ChannelParams& params) {
    const int idx = std::clamp(static_cast<int>(cqi), 1, 15) - 1;
    return params.cqi_table[static_cast<size_t>(idx)];
}

double antenna_gain_db(double elevation_deg, const ChannelParams& params) {
    const auto& pts = params.antenna_gain;
    if (pts.empty()) return 0.0;
    if (elevation_deg <= pts.front().elevation_deg) return pts.front().gain_db;
    if (elevation_deg >= pts.back().elevation_deg) return pts.back().gain_db;
    const auto hi = std::upper_bound(
        pts.begin(), pts.end(), elevation_deg,
        [](double e, const AntennaGainPoint& p) { return e < p.elevation_deg; });
    const auto lo = hi - 1;
    const double t = (elevation_deg - lo->elevation_deg) / (hi->elevation_deg - lo->elevation_deg);
    return lo->gain_db + t * (hi->gain_db - lo->gain_db);
}

void validate(const LinkBudget& budget) {
    if (!(budget.bandwidth_hz > 0.0)) throw std::invalid_argument("link_budget.bandwidth_hz must be > 0");
    if (!(budget.carrier_freq_hz > 0.0)) {
        throw std::invalid_argument("link_budget.carrier_freq_hz must be > 0");
    }
}

void validate(const ChannelParams& params) {
    if (!(params.p0 >= 0.0 && params.p0 <= 1.0)) throw std::invalid_argument("channel.p0 must be in [0, 1]");
    if (!(params.theta_sat_deg > 0.0)) throw std::invalid_argument("channel.theta_sat_deg must be > 0");
    if (!(params.d_ref_m > 0.0)) throw std::invalid_argument("channel.d_ref_m must be > 0");
    if (!(params.cqi_step_db > 0.0)) throw std::invalid_argument("channel.cqi_step_db must be > 0");
    if (!(params.los_exponent > 0.0) || !(params.nlos_exponent > 0.0)) {
        throw std::invalid_argument("channel path-loss exponents must be > 0");
    }
    if (!std::is_sorted(params.cqi_table.begin(), params.cqi_table.end())) {
        throw std::invalid_argument("channel.cqi_table must be non-decreasing");
    }
    for (size_t i = 1; i < params.antenna_gain.size(); ++i) {
        if (!(params.antenna_gain[i].elevation_deg > params.antenna_gain[i - 1].elevation_deg)) {
            throw std::invalid_argument("channel.antenna_gain elevations must be strictly increasing");
        }
    }
    if (params.shadowing && !(params.shadowing_sigma_db >= 0.0)) {
        throw std::invalid_argument("channel.shadowing_sigma_db must be >= 0");
    }
}

double draw_shadowing_db(const ChannelParams& params, RngStream& rng) {
    return params.shadowing ? rng.normal(0.0, params.shadowing_sigma_db) : 0.0;
}

ChannelState evaluate(Vec3 ue_pos, Vec3 gnb_pos, const LinkBudget& budget,
                      const ChannelParams& params, bool los, double shadowing_db) {
    const Geometry g = geometry(ue_pos, gnb_pos);
    ChannelState s;
    s.distance_3d_m = g.distance_3d_m;
    s.elevation_deg = g.elevation_deg;
    s.los = los;
    s.path_loss_db = path_loss_db(std::max(g.distance_3d_m, params.d_ref_m),
                                  budget.carrier_freq_hz, los, params) +
                     shadowing_db;
    s.snr_db = snr_db(budget, s.path_loss_db) + antenna_gain_db(g.elevation_deg, params);
    s.cqi = snr_to_cqi(s.snr_db, params);
    return s;
}

}  // namespace aerial_twin::channel
