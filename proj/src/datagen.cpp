#include "aerial_twin/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace aerial_twin::datagen {

DatagenConfig make_config(const phy::TddConfig& tdd, const mac::SchedConfig& sched,
                          const channel::ChannelParams& channel) {
    const auto pattern = phy::derive_tdd_pattern(tdd);
    uint64_t data_symbols = 0;
    for (const auto& slot : pattern.slots) data_symbols += phy::dl_data_symbols(slot, sched.overhead_symbols);
    DatagenConfig cfg;
    cfg.channel = channel;
    const double periods_per_s = 1000.0 / tdd.period_ms;
    cfg.capacity_bps_per_eff = static_cast<double>(tdd.n_prb) * mac::kSubcarriersPerRb *
                               static_cast<double>(data_symbols) * periods_per_s;
    return cfg;
}

RateModel::RateModel(const channel::ChannelParams& params) {
    const double step = params.cqi_step_db;
    snr_[0] = params.snr_min_db - 0.5 * step;
    eff_[0] = 0.0;
    for (size_t k = 1; k <= 15; ++k) {
        snr_[k] = params.snr_min_db + (static_cast<double>(k) - 0.5) * step;
        eff_[k] = params.cqi_table[k - 1];
    }
}

double RateModel::efficiency(double snr_db) const {
    if (snr_db <= snr_.front()) return eff_.front();
    if (snr_db >= snr_.back()) return eff_.back();
    const auto hi = static_cast<size_t>(std::upper_bound(snr_.begin(), snr_.end(), snr_db) - snr_.begin());
    const size_t lo = hi - 1;
    const double t = (snr_db - snr_[lo]) / (snr_[hi] - snr_[lo]);
    return eff_[lo] + t * (eff_[hi] - eff_[lo]);
}

double RateModel::snr_for_efficiency(double eff) const {
    if (eff <= eff_.front()) return snr_.front();
    if (eff >= eff_.back()) return snr_.back();
    // first knot with efficiency strictly above eff
    const auto hi = static_cast<size_t>(std::upper_bound(eff_.begin(), eff_.end(), eff) - eff_.begin());
    const size_t lo = hi - 1;
    if (eff_[hi] == eff_[lo]) return snr_[lo];
    const double t = (eff - eff_[lo]) / (eff_[hi] - eff_[lo]);
    return snr_[lo] + t * (snr_[hi] - snr_[lo]);
}

bool is_capped(double throughput_mbps, double offered_load_mbps, const DatagenConfig& cfg) {
    return throughput_mbps >= offered_load_mbps * (1.0 - cfg.cap_tolerance);
}

namespace {

double full_rate_mbps(double eff, const DatagenConfig& cfg) {
    return eff * cfg.capacity_bps_per_eff * cfg.rb_share / 1e6;
}

double implied_efficiency(double throughput_mbps, const DatagenConfig& cfg) {
    if (!(cfg.capacity_bps_per_eff > 0.0) || !(cfg.rb_share > 0.0)) {
        throw std::invalid_argument("datagen config has no capacity");
    }
    return throughput_mbps * 1e6 / (cfg.capacity_bps_per_eff * cfg.rb_share);
}

}  // namespace

double invert_rate_to_snr(const CurvePoint& point, double offered_load_mbps, const DatagenConfig& cfg) {
    if (is_capped(point.throughput_mbps, offered_load_mbps, cfg)) {
        throw CappedPointError("point at " + std::to_string(point.horizontal_m) +
                               " m is capped at the offered load");
    }
    return RateModel(cfg.channel).snr_for_efficiency(implied_efficiency(point.throughput_mbps, cfg));
}

double rate_at_snr(double snr_db, double offered_load_mbps, const DatagenConfig& cfg) {
    const double rate = full_rate_mbps(RateModel(cfg.channel).efficiency(snr_db), cfg);
    return std::min(rate, offered_load_mbps);
}

MeasuredCurve power_shift_curve(const MeasuredCurve& curve, double new_power_dbm,
                                const DatagenConfig& cfg) {
    const double delta = new_power_dbm - curve.power_dbm;
    MeasuredCurve out = curve;
    out.power_dbm = new_power_dbm;
    if (delta == 0.0) return out;

    const RateModel model(cfg.channel);
    const double cap = curve.offered_load_mbps;
    const double cap_snr = model.snr_for_efficiency(implied_efficiency(cap, cfg));
    for (auto& p : out.points) {
        double snr = 0.0;
        if (is_capped(p.throughput_mbps, cap, cfg)) {
            if (delta >= 0.0) {
                p.throughput_mbps = cap;
                continue;
            }
            snr = cap_snr;
        } else {
            snr = model.snr_for_efficiency(implied_efficiency(p.throughput_mbps, cfg));
        }
        p.throughput_mbps = std::min(full_rate_mbps(model.efficiency(snr + delta), cfg), cap);
    }
    return out;
}

namespace {

double interpolate(const std::vector<CurvePoint>& pts, double x) {
    if (x <= pts.front().horizontal_m) return pts.front().throughput_mbps;
    if (x >= pts.back().horizontal_m) return pts.back().throughput_mbps;
    const auto hi = std::upper_bound(pts.begin(), pts.end(), x, [](double v, const CurvePoint& p) {
        return v < p.horizontal_m;
    });
    const auto lo = hi - 1;
    const double t = (x - lo->horizontal_m) / (hi->horizontal_m - lo->horizontal_m);
    return lo->throughput_mbps + t * (hi->throughput_mbps - lo->throughput_mbps);
}

}  // namespace

Score score_generated(const MeasuredCurve& gen, const MeasuredCurve& oracle, const DatagenConfig& cfg) {
    if (gen.points.empty() || oracle.points.empty()) {
        throw std::invalid_argument("score: empty curve");
    }
    const double lo = std::max(gen.points.front().horizontal_m, oracle.points.front().horizontal_m);
    const double hi = std::min(gen.points.back().horizontal_m, oracle.points.back().horizontal_m);
    if (lo > hi) throw std::invalid_argument("score: curves cover disjoint distance ranges");

    std::vector<double> errs;
    for (const auto& o : oracle.points) {
        if (o.horizontal_m < lo || o.horizontal_m > hi) continue;
        if (is_capped(o.throughput_mbps, oracle.offered_load_mbps, cfg) || !(o.throughput_mbps > 0.0)) {
            continue;
        }
        const double g = interpolate(gen.points, o.horizontal_m);
        errs.push_back(std::abs(g - o.throughput_mbps) / o.throughput_mbps);
    }
    if (errs.empty()) throw std::invalid_argument("score: no uncapped oracle points in the shared range");

    Score s;
    s.points = errs.size();
    std::sort(errs.begin(), errs.end());
    const size_t n = errs.size();
    s.median_rel_err = n % 2 == 1 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
    s.max_rel_err = errs.back();
    const auto within = std::count_if(errs.begin(), errs.end(), [](double e) { return e <= 0.10 + 1e-12; });
    s.fraction_within_10pct = static_cast<double>(within) / static_cast<double>(n);
    return s;
}

void validate(const MeasuredCurve& curve) {
    for (size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        if (i > 0 && !(p.horizontal_m > curve.points[i - 1].horizontal_m)) {
            throw std::invalid_argument("curve distances must be strictly increasing");
        }
        if (!(p.throughput_mbps >= 0.0) || p.throughput_mbps > curve.offered_load_mbps) {
            throw std::invalid_argument("curve throughput at " + xapp::format_double(p.horizontal_m) +
                                        " m outside [0, offered_load]");
        }
    }
}

MeasuredCurve curve_from_series(std::span<const xapp::SeriesPoint> series, uint32_t ue_id, double bin_m,
                                double power_dbm, double offered_load_mbps) {
    MeasuredCurve curve;
    curve.power_dbm = power_dbm;
    curve.offered_load_mbps = offered_load_mbps;
    for (const auto& b : xapp::bin_by_distance(series, bin_m)) {
        if (b.ue_id != ue_id) continue;
        curve.points.push_back({0.5 * (b.lo_m + b.hi_m), std::min(b.mean_thp_mbps, offered_load_mbps)});
    }
    return curve;
}

std::string format_curve_csv(const MeasuredCurve& curve) {
    std::ostringstream os;
    os << "# power_dbm=" << xapp::format_double(curve.power_dbm)
       << " offered_load_mbps=" << xapp::format_double(curve.offered_load_mbps) << '\n';
    os << "horizontal_m,throughput_mbps\n";
    for (const auto& p : curve.points) {
        os << xapp::format_double(p.horizontal_m) << ',' << xapp::format_double(p.throughput_mbps) << '\n';
    }
    return os.str();
}

MeasuredCurve parse_curve_csv(const std::string& text) {
    MeasuredCurve curve;
    bool have_power = false;
    bool have_load = false;
    bool have_header = false;
    std::istringstream is(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream kv(line.substr(1));
            std::string tok;
            while (kv >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const auto key = tok.substr(0, eq);
                const auto val = tok.substr(eq + 1);
                if (key == "power_dbm") {
                    curve.power_dbm = xapp::parse_double(val);
                    have_power = true;
                } else if (key == "offered_load_mbps") {
                    curve.offered_load_mbps = xapp::parse_double(val);
                    have_load = true;
                }
            }
            continue;
        }
        if (!have_header) {
            if (line != "horizontal_m,throughput_mbps") {
                throw std::invalid_argument("curve CSV: unexpected header '" + line + "'");
            }
            have_header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw std::invalid_argument("curve CSV line " + std::to_string(line_no) + ": expected 2 fields");
        }
        curve.points.push_back({xapp::parse_double(std::string_view(line).substr(0, comma)),
                                xapp::parse_double(std::string_view(line).substr(comma + 1))});
    }
    if (!have_power || !have_load) {
        throw std::invalid_argument("curve CSV: missing '# power_dbm=<v> offered_load_mbps=<v>' line");
    }
    if (!have_header) throw std::invalid_argument("curve CSV: missing header");
    validate(curve);
    return curve;
}

void write_curve(const MeasuredCurve& curve, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f << format_curve_csv(curve);
    if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

MeasuredCurve read_curve(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_curve_csv(ss.str());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace aerial_twin::datagen
