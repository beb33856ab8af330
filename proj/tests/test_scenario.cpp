#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "aerial_twin/scenario.hpp"

using namespace aerial_twin;
using namespace aerial_twin::expcli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = AT_SCENARIO_DIR;

json bundled(const std::string& name) {
    std::ifstream f(kDir / (name + ".json"));
    return json::parse(f);
}

/// Parses `doc` and returns the ConfigError message, or "" if it parsed.
std::string error_of(const json& doc) {
    try {
        parse_scenario(doc.dump());
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST_CASE("every bundled scenario loads") {
    size_t n = 0;
    for (const auto& entry : fs::directory_iterator(kDir)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path());
        const auto sc = load_scenario(entry.path());
        CHECK(sc.name == entry.path().stem().string());
        CHECK_NOTHROW(validate(sc));
        ++n;
    }
    CHECK(n == 4);
}

TEST_CASE("fig3 hover scenario") {
    const auto sc = load_scenario(kDir / "fig3_hover.json");
    REQUIRE(sc.ues.size() == 2);
    const auto& ground = sc.ues[1];
    CHECK(ground.type == ran::AttachType::Ground);
    CHECK(ground.offered_load_bps == 2e6);
    CHECK(sc.ues[0].offered_load_bps == 18e6);
    const auto& traj = sc.trajectories[1];
    REQUIRE(traj.name == ground.trajectory);
    const auto p = traj.waypoints.at(0).pos;
    CHECK(std::hypot(p.x - sc.gnb_pos.x, p.y - sc.gnb_pos.y) == doctest::Approx(20.0));
    CHECK(sc.xapp.report_period_ms == 100);
    CHECK(sc.transport.kind == TransportKind::InProc);
}

TEST_CASE("defaults fill omitted optional sections") {
    const json doc = {{"name", "tiny"},
                      {"duration_s", 1},
                      {"trajectories", {{{"name", "t"}, {"mode", "static"}, {"waypoints", {{{"pos", {1, 0, 1}}}}}}}},
                      {"ues", {{{"id", 1}, {"type", "ground"}, {"offered_load_bps", 1e6}, {"trajectory", "t"}}}}};
    const auto sc = parse_scenario(doc.dump());
    CHECK(sc.tdd == phy::TddConfig{});
    CHECK(sc.seed == 1);
    CHECK(sc.xapp.bin_m == 10.0);
    CHECK(sc.ues[0].sdu_size_bits == 12000);
    CHECK(sc.transport.kind == TransportKind::InProc);
}

TEST_CASE("config errors name the key path") {
    auto doc = bundled("fig3_hover");

    SUBCASE("unknown key") {
        doc["tdd"]["scs_khZ"] = 30;
        const auto msg = error_of(doc);
        CHECK(starts_with(msg, "tdd.scs_khZ"));
        CHECK(msg.find("unknown") != std::string::npos);
    }
    SUBCASE("dangling trajectory") {
        doc["ues"][0]["trajectory"] = "missing";
        const auto msg = error_of(doc);
        CHECK(starts_with(msg, "ues[0].trajectory"));
        CHECK(msg.find("missing") != std::string::npos);
    }
    SUBCASE("missing required section") {
        doc.erase("ues");
        CHECK(starts_with(error_of(doc), "ues"));
        doc = bundled("fig3_hover");
        doc.erase("trajectories");
        CHECK(starts_with(error_of(doc), "trajectories"));
    }
    SUBCASE("non-positive duration") {
        doc["duration_s"] = 0;
        CHECK(starts_with(error_of(doc), "duration_s"));
        doc["duration_s"] = -3;
        CHECK(starts_with(error_of(doc), "duration_s"));
    }
    SUBCASE("wrong type") {
        doc["tdd"]["n_prb"] = "fifty";
        CHECK(starts_with(error_of(doc), "tdd.n_prb"));
    }
    SUBCASE("module invariants are relabelled with their section") {
        doc["tdd"]["full_dl_slots"] = 20;
        CHECK(starts_with(error_of(doc), "tdd"));
    }
    SUBCASE("unknown transport") {
        doc["transport"]["kind"] = "carrier-pigeon";
        CHECK(starts_with(error_of(doc), "transport.kind"));
    }
    SUBCASE("duplicate UE id") {
        doc["ues"][1]["id"] = 1;
        CHECK(starts_with(error_of(doc), "ues[1].id"));
    }
    SUBCASE("events must change something and reference a UE") {
        doc["events"] = json::array({{{"t_s", 1}, {"ue_id", 1}}});
        CHECK(starts_with(error_of(doc), "events[0]"));
        doc["events"] = json::array({{{"t_s", 1}, {"ue_id", 9}, {"rb_cap", 3}}});
        CHECK(starts_with(error_of(doc), "events[0].ue_id"));
    }
    SUBCASE("invalid JSON") {
        CHECK_THROWS_AS(parse_scenario("{"), ConfigError);
    }
}

TEST_CASE("load errors carry the file path") {
    const auto missing = kDir / "nope.json";
    try {
        load_scenario(missing);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
    }
}
