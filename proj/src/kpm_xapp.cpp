#include "aerial_twin/kpm_xapp.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "aerial_twin/ric.hpp"

namespace aerial_twin::xapp {

SeriesPoint derive_point(const KpmRecord& record, Vec3 gnb_pos) {
    SeriesPoint p;
    p.t_ms = record.t_ms;
    p.ue_id = record.ue_id;
    const double x = record.pos_x_cm / 100.0;
    const double y = record.pos_y_cm / 100.0;
    p.horizontal_m = std::hypot(x - gnb_pos.x, y - gnb_pos.y);
    p.altitude_m = record.pos_z_cm / 100.0;
    p.dl_thp_mbps = record.dl_thp_kbps / 1000.0;
    p.rb_count = record.rb_count;
    if (record.sdu_latency_us) p.sdu_latency_ms = *record.sdu_latency_us / 1000.0;
    return p;
}

void KpmXapp::on_indication(const e2::Indication& ind) {
    if (!owned_.contains(ind.sub_id)) {
        ++unknown_;
        spdlog::warn("kpm xapp: ignoring indication for unknown sub_id {}", ind.sub_id);
        return;
    }
    if (!seen_.emplace(ind.sub_id, ind.seq).second) {
        ++duplicates_;
        return;
    }
    for (const auto& r : ind.records) series_.push_back(derive_point(r, gnb_pos_));
}

void KpmXapp::consume(ric::NearRtRic& ric, uint32_t sub_id) {
    while (auto ind = ric.next_indication(sub_id)) on_indication(*ind);
}

std::vector<DistanceBin> bin_by_distance(std::span<const SeriesPoint> series, double bin_m) {
    if (!(bin_m > 0.0)) throw std::invalid_argument("bin_by_distance: bin_m must be > 0");
    struct Acc {
        size_t n = 0;
        double thp = 0.0;
        double rb = 0.0;
        size_t lat_n = 0;
        double lat = 0.0;
    };
    std::map<std::pair<uint32_t, int64_t>, Acc> acc;
    for (const auto& p : series) {
        const auto idx = static_cast<int64_t>(std::floor(p.horizontal_m / bin_m));
        auto& a = acc[{p.ue_id, idx}];
        ++a.n;
        a.thp += p.dl_thp_mbps;
        a.rb += p.rb_count;
        if (p.sdu_latency_ms) {
            ++a.lat_n;
            a.lat += *p.sdu_latency_ms;
        }
    }
    std::vector<DistanceBin> out;
    out.reserve(acc.size());
    for (const auto& [key, a] : acc) {
        DistanceBin b;
        b.ue_id = key.first;
        b.index = key.second;
        b.lo_m = static_cast<double>(key.second) * bin_m;
        b.hi_m = static_cast<double>(key.second + 1) * bin_m;
        b.count = a.n;
        b.mean_thp_mbps = a.thp / static_cast<double>(a.n);
        b.mean_rb = a.rb / static_cast<double>(a.n);
        b.latency_count = a.lat_n;
        if (a.lat_n > 0) b.mean_latency_ms = a.lat / static_cast<double>(a.lat_n);
        out.push_back(b);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, end);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

namespace {

template <typename T>
T parse_uint(std::string_view s) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("not an unsigned integer: '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

std::string format_series_csv(std::span<const SeriesPoint> series) {
    std::ostringstream os;
    os << kSeriesCsvHeader << '\n';
    for (const auto& p : series) {
        os << p.t_ms << ',' << p.ue_id << ',' << format_double(p.horizontal_m) << ','
           << format_double(p.altitude_m) << ',' << format_double(p.dl_thp_mbps) << ',' << p.rb_count
           << ',';
        if (p.sdu_latency_ms) os << format_double(*p.sdu_latency_ms);
        os << '\n';
    }
    return os.str();
}

std::vector<SeriesPoint> parse_series_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kSeriesCsvHeader) {
        throw std::invalid_argument("series CSV: missing or unexpected header");
    }
    std::vector<SeriesPoint> out;
    size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 7) {
            throw std::invalid_argument("series CSV line " + std::to_string(line_no) +
                                        ": expected 7 fields");
        }
        try {
            SeriesPoint p;
            p.t_ms = parse_uint<uint64_t>(f[0]);
            p.ue_id = parse_uint<uint32_t>(f[1]);
            p.horizontal_m = parse_double(f[2]);
            p.altitude_m = parse_double(f[3]);
            p.dl_thp_mbps = parse_double(f[4]);
            p.rb_count = parse_uint<uint32_t>(f[5]);
            if (!f[6].empty()) p.sdu_latency_ms = parse_double(f[6]);
            out.push_back(p);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("series CSV line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void export_series(std::span<const SeriesPoint> series, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f << format_series_csv(series);
    if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::vector<SeriesPoint> import_series(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_series_csv(ss.str());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace aerial_twin::xapp
