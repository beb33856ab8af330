#include "aerial_twin/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace aerial_twin::expcli {

using nlohmann::json;

std::string to_string(TransportKind kind) {
    return kind == TransportKind::Socket ? "socket" : "inproc";
}

TransportKind transport_kind_from_string(const std::string& s) {
    if (s == "inproc") return TransportKind::InProc;
    if (s == "socket") return TransportKind::Socket;
    throw std::invalid_argument("unknown transport '" + s + "' (expected inproc or socket)");
}

ran::NodeConfig Scenario::node_config() const {
    ran::NodeConfig cfg;
    cfg.tdd = tdd;
    cfg.sched = sched;
    cfg.channel = channel;
    cfg.link_budget = link_budget;
    cfg.gnb_pos = gnb_pos;
    cfg.los_resample_ms = los_resample_ms;
    cfg.seed = seed;
    return cfg;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

/// Reads one JSON object, remembering which keys were consumed so that
/// finish() can reject the rest.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json* find(const std::string& key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& require(const std::string& key) {
        const json* v = find(key);
        if (v == nullptr) fail(join(path_, key), "missing required key");
        return *v;
    }

    std::string key_path(const std::string& key) const { return join(path_, key); }

    template <typename T>
    void opt(const std::string& key, T& out) {
        if (const json* v = find(key)) out = convert<T>(*v, join(path_, key));
    }

    template <typename T>
    T req(const std::string& key) {
        return convert<T>(require(key), join(path_, key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.contains(it.key())) fail(join(path_, it.key()), "unknown key");
        }
    }

    template <typename T>
    static T convert(const json& v, const std::string& path) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) fail(path, "expected a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) fail(path, "expected a string");
            return v.get<std::string>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) fail(path, "expected an integer");
            if (v.is_number_unsigned()) {
                const auto u = v.get<uint64_t>();
                if (u > static_cast<uint64_t>(std::numeric_limits<T>::max())) fail(path, "integer out of range");
                return static_cast<T>(u);
            }
            const auto s = v.get<int64_t>();
            if (s < static_cast<int64_t>(std::numeric_limits<T>::min()) ||
                (s > 0 && static_cast<uint64_t>(s) > static_cast<uint64_t>(std::numeric_limits<T>::max()))) {
                fail(path, "integer out of range");
            }
            return static_cast<T>(s);
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) fail(path, "expected a number");
            const auto d = v.get<double>();
            if (!std::isfinite(d)) fail(path, "expected a finite number");
            return static_cast<T>(d);
        } else {
            static_assert(sizeof(T) == 0, "unsupported type");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

const json& require_array(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
}

Vec3 parse_vec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) fail(path, "expected [x, y, z]");
    return {Section::convert<double>(v[0], index_path(path, 0)),
            Section::convert<double>(v[1], index_path(path, 1)),
            Section::convert<double>(v[2], index_path(path, 2))};
}

void parse_tdd(Section s, phy::TddConfig& tdd) {
    s.opt("scs_khz", tdd.scs_khz);
    s.opt("period_ms", tdd.period_ms);
    s.opt("full_dl_slots", tdd.full_dl_slots);
    s.opt("extra_dl_symbols", tdd.extra_dl_symbols);
    s.opt("full_ul_slots", tdd.full_ul_slots);
    s.opt("extra_ul_symbols", tdd.extra_ul_symbols);
    s.opt("n_prb", tdd.n_prb);
    s.opt("symbols_per_slot", tdd.symbols_per_slot);
    s.finish();
}

void parse_channel(Section s, Scenario& sc) {
    auto& c = sc.channel;
    s.opt("p0", c.p0);
    s.opt("theta_sat_deg", c.theta_sat_deg);
    s.opt("los_exponent", c.los_exponent);
    s.opt("nlos_exponent", c.nlos_exponent);
    s.opt("d_ref_m", c.d_ref_m);
    s.opt("snr_min_db", c.snr_min_db);
    s.opt("cqi_step_db", c.cqi_step_db);
    s.opt("shadowing", c.shadowing);
    s.opt("shadowing_sigma_db", c.shadowing_sigma_db);
    s.opt("los_resample_ms", sc.los_resample_ms);
    if (const json* t = s.find("cqi_table")) {
        const auto path = s.key_path("cqi_table");
        if (!t->is_array() || t->size() != c.cqi_table.size()) fail(path, "expected 15 efficiencies");
        for (size_t i = 0; i < c.cqi_table.size(); ++i) {
            c.cqi_table[i] = Section::convert<double>((*t)[i], index_path(path, i));
        }
    }
    if (const json* g = s.find("antenna_gain")) {
        const auto path = s.key_path("antenna_gain");
        require_array(*g, path);
        c.antenna_gain.clear();
        for (size_t i = 0; i < g->size(); ++i) {
            Section p((*g)[i], index_path(path, i));
            channel::AntennaGainPoint pt;
            pt.elevation_deg = p.req<double>("elevation_deg");
            pt.gain_db = p.req<double>("gain_db");
            p.finish();
            c.antenna_gain.push_back(pt);
        }
    }
    s.finish();
}

void parse_sched(Section s, mac::SchedConfig& c) {
    s.opt("ewma_window_slots", c.ewma_window_slots);
    s.opt("ewma_floor_bps", c.ewma_floor_bps);
    s.opt("overhead_symbols", c.overhead_symbols);
    s.opt("max_rb_per_ue", c.max_rb_per_ue);
    s.finish();
}

void parse_link_budget(Section s, channel::LinkBudget& b) {
    s.opt("tx_power_dbm", b.tx_power_dbm);
    s.opt("tx_gain_db", b.tx_gain_db);
    s.opt("rx_gain_db", b.rx_gain_db);
    s.opt("noise_figure_db", b.noise_figure_db);
    s.opt("bandwidth_hz", b.bandwidth_hz);
    s.opt("carrier_freq_hz", b.carrier_freq_hz);
    s.finish();
}

ran::UeSpec parse_ue(Section s) {
    ran::UeSpec ue;
    ue.id = s.req<uint32_t>("id");
    const auto type_path = s.key_path("type");
    try {
        ue.type = ran::attach_type_from_string(s.req<std::string>("type"));
    } catch (const std::invalid_argument& e) {
        fail(type_path, e.what());
    }
    ue.offered_load_bps = s.req<double>("offered_load_bps");
    ue.trajectory = s.req<std::string>("trajectory");
    s.opt("sdu_size_bits", ue.sdu_size_bits);
    s.opt("rlc_buffer_bits", ue.rlc_buffer_bits);
    s.finish();
    return ue;
}

mobility::Trajectory parse_trajectory(Section s) {
    mobility::Trajectory t;
    t.name = s.req<std::string>("name");
    const auto mode_path = s.key_path("mode");
    try {
        t.mode = mobility::trajectory_mode_from_string(s.req<std::string>("mode"));
    } catch (const std::invalid_argument& e) {
        fail(mode_path, e.what());
    }
    s.opt("speed_mps", t.speed_mps);
    const auto wp_path = s.key_path("waypoints");
    const json& wps = require_array(s.require("waypoints"), wp_path);
    for (size_t i = 0; i < wps.size(); ++i) {
        Section w(wps[i], index_path(wp_path, i));
        mobility::Waypoint wp;
        wp.pos = parse_vec3(w.require("pos"), w.key_path("pos"));
        w.opt("hold_s", wp.hold_s);
        w.finish();
        t.waypoints.push_back(wp);
    }
    s.finish();
    return t;
}

ScenarioEvent parse_event(Section s) {
    ScenarioEvent ev;
    ev.t_s = s.req<double>("t_s");
    ev.ue_id = s.req<uint32_t>("ue_id");
    if (s.has("rb_cap")) ev.rb_cap = s.req<uint32_t>("rb_cap");
    if (s.has("offered_load_bps")) ev.offered_load_bps = s.req<double>("offered_load_bps");
    s.finish();
    return ev;
}

/// Runs a module validator and re-labels its message with the section path.
template <typename F>
void check(const std::string& path, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
}

}  // namespace

void validate(const Scenario& sc) {
    if (sc.name.empty()) fail("name", "must not be empty");
    if (!(sc.duration_s > 0.0)) fail("duration_s", "must be > 0");
    check("tdd", [&] { phy::validate(sc.tdd); });
    check("channel", [&] { channel::validate(sc.channel); });
    if (sc.los_resample_ms == 0) fail("channel.los_resample_ms", "must be > 0");
    check("sched", [&] { mac::validate(sc.sched); });
    check("link_budget", [&] { channel::validate(sc.link_budget); });
    if (sc.xapp.report_period_ms == 0) fail("xapp.report_period_ms", "must be > 0");
    if (!(sc.xapp.bin_m > 0.0)) fail("xapp.bin_m", "must be > 0");
    if (sc.ues.empty()) fail("ues", "at least one UE is required");

    std::set<std::string> names;
    for (size_t i = 0; i < sc.trajectories.size(); ++i) {
        const auto path = index_path("trajectories", i);
        if (!names.insert(sc.trajectories[i].name).second) {
            fail(path + ".name", "duplicate trajectory '" + sc.trajectories[i].name + "'");
        }
        check(path, [&] { mobility::validate(sc.trajectories[i]); });
    }
    std::set<uint32_t> ids;
    for (size_t i = 0; i < sc.ues.size(); ++i) {
        const auto& ue = sc.ues[i];
        const auto path = index_path("ues", i);
        if (!ids.insert(ue.id).second) fail(path + ".id", "duplicate UE id " + std::to_string(ue.id));
        if (!names.contains(ue.trajectory)) {
            fail(path + ".trajectory", "dangling reference to undefined trajectory '" + ue.trajectory + "'");
        }
        if (!(ue.offered_load_bps >= 0.0)) fail(path + ".offered_load_bps", "must be >= 0");
        if (ue.sdu_size_bits == 0) fail(path + ".sdu_size_bits", "must be > 0");
    }
    for (size_t i = 0; i < sc.events.size(); ++i) {
        const auto& ev = sc.events[i];
        const auto path = index_path("events", i);
        if (!(ev.t_s >= 0.0)) fail(path + ".t_s", "must be >= 0");
        if (!ids.contains(ev.ue_id)) fail(path + ".ue_id", "unknown UE " + std::to_string(ev.ue_id));
        if (ev.offered_load_bps && !(*ev.offered_load_bps >= 0.0)) {
            fail(path + ".offered_load_bps", "must be >= 0");
        }
        if (!ev.rb_cap && !ev.offered_load_bps) fail(path, "event changes nothing");
        if (i > 0 && ev.t_s < sc.events[i - 1].t_s) fail(path + ".t_s", "events must be in time order");
    }
}

Scenario parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("<root>: invalid JSON: ") + e.what());
    }

    Scenario sc;
    Section s(root, "");
    sc.name = s.req<std::string>("name");
    s.opt("seed", sc.seed);
    sc.duration_s = s.req<double>("duration_s");
    if (const json* v = s.find("tdd")) parse_tdd(Section(*v, "tdd"), sc.tdd);
    if (const json* v = s.find("channel")) parse_channel(Section(*v, "channel"), sc);
    if (const json* v = s.find("sched")) parse_sched(Section(*v, "sched"), sc.sched);
    if (const json* v = s.find("link_budget")) parse_link_budget(Section(*v, "link_budget"), sc.link_budget);
    if (const json* v = s.find("gnb_pos")) sc.gnb_pos = parse_vec3(*v, "gnb_pos");

    const json& trajs = require_array(s.require("trajectories"), "trajectories");
    for (size_t i = 0; i < trajs.size(); ++i) {
        sc.trajectories.push_back(parse_trajectory(Section(trajs[i], index_path("trajectories", i))));
    }
    const json& ues = require_array(s.require("ues"), "ues");
    for (size_t i = 0; i < ues.size(); ++i) sc.ues.push_back(parse_ue(Section(ues[i], index_path("ues", i))));
    if (const json* v = s.find("events")) {
        require_array(*v, "events");
        for (size_t i = 0; i < v->size(); ++i) {
            sc.events.push_back(parse_event(Section((*v)[i], index_path("events", i))));
        }
    }
    if (const json* v = s.find("xapp")) {
        Section x(*v, "xapp");
        x.opt("report_period_ms", sc.xapp.report_period_ms);
        x.opt("bin_m", sc.xapp.bin_m);
        x.finish();
    }
    if (const json* v = s.find("transport")) {
        Section t(*v, "transport");
        std::string kind = to_string(sc.transport.kind);
        t.opt("kind", kind);
        try {
            sc.transport.kind = transport_kind_from_string(kind);
        } catch (const std::invalid_argument& e) {
            fail("transport.kind", e.what());
        }
        t.opt("address", sc.transport.address);
        t.finish();
    }
    s.finish();
    validate(sc);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(path.string() + ": cannot open scenario file");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_scenario(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace aerial_twin::expcli
