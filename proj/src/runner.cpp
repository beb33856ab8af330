#include "aerial_twin/runner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "aerial_twin/datagen.hpp"
#include "aerial_twin/e2_agent.hpp"
#include "aerial_twin/metric_store.hpp"
#include "aerial_twin/ric.hpp"
#include "aerial_twin/transport.hpp"

namespace aerial_twin::expcli {

namespace fs = std::filesystem;
using xapp::format_double;

RunSummary summarize(std::span<const xapp::SeriesPoint> series, const Scenario& scenario) {
    RunSummary out;
    out.bin_m = scenario.xapp.bin_m;
    std::map<uint32_t, std::vector<const xapp::SeriesPoint*>> by_ue;
    for (const auto& p : series) by_ue[p.ue_id].push_back(&p);

    for (const auto& spec : scenario.ues) {
        UeSummary s;
        s.ue_id = spec.id;
        s.type = spec.type;
        s.offered_mbps = spec.offered_load_bps / 1e6;
        const auto it = by_ue.find(spec.id);
        if (it != by_ue.end() && !it->second.empty()) {
            const auto& pts = it->second;
            s.points = pts.size();
            s.min_thp_mbps = pts.front()->dl_thp_mbps;
            s.max_thp_mbps = pts.front()->dl_thp_mbps;
            double sum = 0.0;
            double lat_sum = 0.0;
            size_t lat_n = 0;
            for (const auto* p : pts) {
                sum += p->dl_thp_mbps;
                s.min_thp_mbps = std::min(s.min_thp_mbps, p->dl_thp_mbps);
                s.max_thp_mbps = std::max(s.max_thp_mbps, p->dl_thp_mbps);
                s.rb_total += p->rb_count;
                if (p->sdu_latency_ms) {
                    lat_sum += *p->sdu_latency_ms;
                    ++lat_n;
                }
            }
            s.mean_thp_mbps = sum / static_cast<double>(pts.size());
            if (lat_n > 0) s.mean_latency_ms = lat_sum / static_cast<double>(lat_n);
        }
        out.ues.push_back(s);
    }
    out.bins = xapp::bin_by_distance(series, scenario.xapp.bin_m);
    return out;
}

std::string format_summary(const RunSummary& summary, const Scenario& scenario) {
    std::ostringstream os;
    os << "scenario " << scenario.name << " seed " << scenario.seed << " duration_s "
       << format_double(scenario.duration_s) << '\n';
    os << "\n[ues]\n";
    os << "ue_id,type,offered_mbps,points,mean_thp_mbps,min_thp_mbps,max_thp_mbps,mean_latency_ms,rb_total\n";
    for (const auto& u : summary.ues) {
        os << u.ue_id << ',' << ran::to_string(u.type) << ',' << format_double(u.offered_mbps) << ','
           << u.points << ',' << format_double(u.mean_thp_mbps) << ',' << format_double(u.min_thp_mbps) << ','
           << format_double(u.max_thp_mbps) << ',';
        if (u.mean_latency_ms) os << format_double(*u.mean_latency_ms);
        os << ',' << u.rb_total << '\n';
    }
    os << "\n[distance_bins] bin_m=" << format_double(summary.bin_m) << '\n';
    os << "ue_id,lo_m,hi_m,count,mean_thp_mbps,mean_rb,mean_latency_ms\n";
    for (const auto& b : summary.bins) {
        os << b.ue_id << ',' << format_double(b.lo_m) << ',' << format_double(b.hi_m) << ',' << b.count << ','
           << format_double(b.mean_thp_mbps) << ',' << format_double(b.mean_rb) << ',';
        if (b.mean_latency_ms) os << format_double(*b.mean_latency_ms);
        os << '\n';
    }
    return os.str();
}

std::string sha256_hex(const fs::path& file) {
    std::ifstream f(file, std::ios::binary);
    if (!f) throw IoFailure("cannot open '" + file.string() + "' for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 init failed");
    }
    std::array<char, 1 << 16> buf{};
    while (f) {
        f.read(buf.data(), buf.size());
        if (f.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(f.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[md[i] >> 4];
        out += kHex[md[i] & 0xF];
    }
    return out;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoFailure("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw IoFailure("write failed for '" + path.string() + "'");
}

}  // namespace

void write_manifest(const fs::path& manifest, std::span<const fs::path> files, const std::string& status) {
    std::ostringstream os;
    os << "status " << status << '\n';
    for (const auto& f : files) {
        if (fs::exists(f)) os << sha256_hex(f) << "  " << f.filename().string() << '\n';
    }
    write_text(manifest, os.str());
}

namespace {

/// Everything that talks E2, torn down in a safe order on every exit path.
struct Wiring {
    std::unique_ptr<transport::TcpListener> listener;
    std::unique_ptr<ran::E2Agent> agent;
    std::thread consumer;
    ric::NearRtRic* ric = nullptr;

    void stop() {
        if (agent) agent->close();
        if (ric) ric->shutdown();
        if (consumer.joinable()) consumer.join();
        if (listener) listener->close();
    }
    ~Wiring() { stop(); }
};

uint64_t to_us(double seconds) { return static_cast<uint64_t>(std::llround(seconds * 1e6)); }

}  // namespace

RunArtifacts run(Scenario sc, const fs::path& out_dir, const RunOptions& options) {
    if (options.seed) sc.seed = *options.seed;
    if (options.transport) sc.transport.kind = *options.transport;
    validate(sc);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create '" + out_dir.string() + "': " + ec.message());

    RunArtifacts art;
    art.store = out_dir / "metrics.db";
    art.kpm_csv = out_dir / "kpm.csv";
    art.series_csv = out_dir / "series.csv";
    art.summary_txt = out_dir / "summary.txt";
    art.manifest = out_dir / "manifest.txt";

    std::unique_ptr<ric::MetricStore> store;
    try {
        // A fixed ingest stamp keeps the store file reproducible.
        store = std::make_unique<ric::MetricStore>(art.store, ric::MetricStore::Mode::Create,
                                                   [] { return int64_t{0}; });
    } catch (const ric::StoreError& e) {
        throw IoFailure(e.what());
    }

    std::unique_ptr<ran::RanNode> node;
    try {
        node = std::make_unique<ran::RanNode>(sc.node_config(), sc.ues, sc.trajectories);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    xapp::KpmXapp monitor(sc.gnb_pos);
    std::string failure;
    {
        ric::NearRtRic ric(*store);
        Wiring w;
        w.ric = &ric;
        try {
            std::unique_ptr<transport::ByteStream> node_end;
            if (sc.transport.kind == TransportKind::InProc) {
                auto [ric_end, e2_end] = transport::make_inproc_pair();
                ric.attach(std::move(ric_end));
                node_end = std::move(e2_end);
            } else {
                w.listener = std::make_unique<transport::TcpListener>(sc.transport.address);
                ric.listen(*w.listener);
                node_end = transport::tcp_connect(w.listener->host() + ":" + std::to_string(w.listener->port()));
            }
            w.agent = std::make_unique<ran::E2Agent>(std::move(node_end), 1);
            w.agent->connect();
            if (!ric.wait_for_nodes(1, std::chrono::seconds(10))) {
                throw ProtocolFailure("E2 node did not complete setup");
            }

            const uint32_t xapp_id = ric.register_xapp("kpm-monitor");
            const auto sub = ric.xapp_subscribe(xapp_id, kKpmFunctionId, sc.xapp.report_period_ms);
            if (!sub.accepted) {
                throw ProtocolFailure("KPM subscription rejected (reason " + std::to_string(sub.reason_code) + ")");
            }
            monitor.own(sub.sub_id);
            w.consumer = std::thread([&monitor, &ric, id = sub.sub_id] { monitor.consume(ric, id); });

            const uint64_t end_us = to_us(sc.duration_s);
            size_t next_event = 0;
            while (node->now_us() < end_us) {
                while (next_event < sc.events.size() && to_us(sc.events[next_event].t_s) <= node->now_us()) {
                    const auto& ev = sc.events[next_event++];
                    if (ev.rb_cap) node->set_rb_cap(ev.ue_id, *ev.rb_cap);
                    if (ev.offered_load_bps) node->set_offered_load(ev.ue_id, *ev.offered_load_bps);
                }
                w.agent->apply_pending(*node);
                node->step();
                w.agent->on_slot_end(*node);
                if (w.agent->failed() || ric.protocol_error()) {
                    throw ProtocolFailure("E2 protocol violation during the run");
                }
            }
            art.indications = w.agent->indications_sent();
            w.agent->close();
            ric.wait_idle();
            if (w.consumer.joinable()) w.consumer.join();
            if (ric.protocol_error()) throw ProtocolFailure("E2 protocol violation during the run");
        } catch (const ProtocolFailure& e) {
            failure = e.what();
        } catch (const transport::TransportError& e) {
            failure = std::string("transport: ") + e.what();
        } catch (const e2::DecodeError& e) {
            failure = std::string("decode: ") + e.what();
        } catch (const std::runtime_error& e) {
            // E2 setup refused
            failure = e.what();
        }
        w.stop();
    }

    // Exports, written even for a failed run so the partial data can be inspected.
    try {
        ric::dump_csv(*store, art.kpm_csv);
        store.reset();
        art.series = monitor.series();
        xapp::export_series(art.series, art.series_csv);
        art.summary = summarize(art.series, sc);
        write_text(art.summary_txt, format_summary(art.summary, sc));
        for (const auto& ue : sc.ues) {
            if (ue.type != ran::AttachType::Aerial) continue;
            auto curve = datagen::curve_from_series(art.series, ue.id, sc.xapp.bin_m,
                                                    sc.link_budget.tx_power_dbm, ue.offered_load_bps / 1e6);
            const auto path = out_dir / ("curve_ue" + std::to_string(ue.id) + ".csv");
            datagen::write_curve(curve, path);
            art.curves.push_back(path);
        }
        std::vector<fs::path> files = {art.store, art.kpm_csv, art.series_csv, art.summary_txt};
        files.insert(files.end(), art.curves.begin(), art.curves.end());
        write_manifest(art.manifest, files, failure.empty() ? "complete" : "incomplete: " + failure);
    } catch (const IoFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw IoFailure(e.what());
    }

    if (!failure.empty()) throw ProtocolFailure(failure);
    return art;
}

namespace {

struct Xy {
    double x = 0.0;
    double y = 0.0;
};

struct SeriesLine {
    std::string label;
    std::vector<Xy> pts;
};

const std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

double nice_step(double span) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) return m * mag;
    }
    return 10.0 * mag;
}

std::string svg_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<SeriesLine>& lines, bool markers) {
    constexpr double W = 720, H = 420, L = 70, R = 20, T = 40, B = 55;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto& l : lines) {
        for (const auto& p : l.pts) {
            if (first) {
                x0 = x1 = p.x;
                y1 = p.y;
                first = false;
            }
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
        }
    }
    y0 = 0.0;
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) y1 = y0 + 1.0;
    const double xs = nice_step(x1 - x0);
    const double ys = nice_step(y1 - y0);
    x0 = std::floor(x0 / xs) * xs;
    x1 = std::ceil(x1 / xs) * xs;
    y1 = std::ceil(y1 / ys) * ys;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    for (double x = x0; x <= x1 + xs * 1e-9; x += xs) {
        os << "<line x1=\"" << px(x) << "\" y1=\"" << T << "\" x2=\"" << px(x) << "\" y2=\"" << H - B
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << format_double(x)
           << "</text>\n";
    }
    for (double y = y0; y <= y1 + ys * 1e-9; y += ys) {
        os << "<line x1=\"" << L << "\" y1=\"" << py(y) << "\" x2=\"" << W - R << "\" y2=\"" << py(y)
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << format_double(y)
           << "</text>\n";
    }
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel
       << "</text>\n";
    os << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << ylabel << "</text>\n";
    for (size_t i = 0; i < lines.size(); ++i) {
        const char* color = kColors[i % kColors.size()];
        const auto& l = lines[i];
        if (markers) {
            for (const auto& p : l.pts) {
                os << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.y) << "\" r=\"1.8\" fill=\"" << color
                   << "\"/>\n";
            }
        } else if (!l.pts.empty()) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& p : l.pts) os << px(p.x) << ',' << py(p.y) << ' ';
            os << "\"/>\n";
        }
        os << "<text x=\"" << W - R - 8 << "\" y=\"" << T + 16 + 16 * static_cast<double>(i)
           << "\" text-anchor=\"end\" fill=\"" << color << "\">" << l.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace

std::vector<fs::path> plot_series(std::span<const xapp::SeriesPoint> series, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create '" + out_dir.string() + "': " + ec.message());

    std::map<uint32_t, std::vector<const xapp::SeriesPoint*>> by_ue;
    for (const auto& p : series) by_ue[p.ue_id].push_back(&p);

    auto make = [&](auto xf, auto yf) {
        std::vector<SeriesLine> lines;
        for (const auto& [id, pts] : by_ue) {
            SeriesLine l;
            l.label = "UE " + std::to_string(id);
            for (const auto* p : pts) {
                if (auto y = yf(*p)) l.pts.push_back({xf(*p), *y});
            }
            lines.push_back(std::move(l));
        }
        return lines;
    };
    auto dist = [](const xapp::SeriesPoint& p) { return p.horizontal_m; };
    auto time_s = [](const xapp::SeriesPoint& p) { return static_cast<double>(p.t_ms) / 1000.0; };
    auto thp = [](const xapp::SeriesPoint& p) { return std::optional<double>(p.dl_thp_mbps); };
    auto rbs = [](const xapp::SeriesPoint& p) { return std::optional<double>(p.rb_count); };
    auto lat = [](const xapp::SeriesPoint& p) { return p.sdu_latency_ms; };

    std::vector<fs::path> written;
    auto emit = [&](const std::string& file, const std::string& svg) {
        const auto path = out_dir / file;
        write_text(path, svg);
        written.push_back(path);
    };
    emit("throughput_vs_distance.svg",
         svg_chart("DL throughput vs horizontal distance", "horizontal distance (m)", "throughput (Mb/s)",
                   make(dist, thp), true));
    emit("rb_vs_distance.svg",
         svg_chart("Allocated RBs per report vs horizontal distance", "horizontal distance (m)", "RBs",
                   make(dist, rbs), true));
    emit("throughput_vs_time.svg",
         svg_chart("DL throughput vs time", "time (s)", "throughput (Mb/s)", make(time_s, thp), false));
    emit("latency_vs_time.svg",
         svg_chart("Mean SDU latency vs time", "time (s)", "latency (ms)", make(time_s, lat), false));
    return written;
}

}  // namespace aerial_twin::expcli
