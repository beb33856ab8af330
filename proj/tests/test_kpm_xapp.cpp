#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "aerial_twin/kpm_xapp.hpp"
#include "rig.hpp"

using namespace aerial_twin;
using xapp::KpmXapp;
using xapp::SeriesPoint;
namespace fs = std::filesystem;

namespace {

fs::path temp(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "aerial_twin_test_xapp";
    fs::create_directories(dir);
    return dir / name;
}

KpmRecord at(uint64_t t, uint32_t ue, int32_t x_cm, int32_t z_cm, uint32_t kbps) {
    KpmRecord r;
    r.t_ms = t;
    r.ue_id = ue;
    r.pos_x_cm = x_cm;
    r.pos_z_cm = z_cm;
    r.dl_thp_kbps = kbps;
    r.rb_count = kbps / 10;
    r.sdu_latency_us = 2500;
    return r;
}

SeriesPoint pt(uint32_t ue, double h, double thp, std::optional<double> lat = std::nullopt) {
    SeriesPoint p;
    p.ue_id = ue;
    p.horizontal_m = h;
    p.dl_thp_mbps = thp;
    p.rb_count = 100;
    p.sdu_latency_ms = lat;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("record to series point") {
    const auto p = xapp::derive_point(at(100, 1, 3000, 1000, 12345), {0, 0, 0});
    CHECK(p.horizontal_m == 30.0);
    CHECK(p.altitude_m == 10.0);
    CHECK(p.dl_thp_mbps == doctest::Approx(12.345));
    CHECK(p.sdu_latency_ms == 2.5);
    // horizontal distance ignores the gNB height
    auto r = at(0, 1, 400, 0, 0);
    r.pos_y_cm = 300;
    CHECK(xapp::derive_point(r, {0, 0, 25}).horizontal_m == doctest::Approx(5.0));
    r.sdu_latency_us.reset();
    CHECK_FALSE(xapp::derive_point(r, {0, 0, 0}).sdu_latency_ms.has_value());
}

TEST_CASE("indications: dedup, counting, foreign ids") {
    KpmXapp x({0, 0, 0});
    x.own(1);
    for (uint64_t seq = 1; seq <= 10; ++seq) {
        x.on_indication({1, seq, {at(seq * 100, 1, 0, 0, 1), at(seq * 100, 2, 0, 0, 2)}});
    }
    CHECK(x.series().size() == 20);
    x.on_indication({1, 3, {at(300, 1, 0, 0, 1), at(300, 2, 0, 0, 2)}});
    CHECK(x.series().size() == 20);
    CHECK(x.duplicates_ignored() == 1);
    x.on_indication({7, 1, {at(0, 1, 0, 0, 1)}});
    CHECK(x.series().size() == 20);
    CHECK(x.unknown_ignored() == 1);
    CHECK(x.indications_seen() == 10);
}

TEST_CASE("distance bins") {
    SUBCASE("two points in one bin average") {
        const std::vector<SeriesPoint> s{pt(1, 11.0, 10.0, 4.0), pt(1, 19.0, 14.0)};
        const auto b = xapp::bin_by_distance(s, 10.0);
        REQUIRE(b.size() == 1);
        CHECK(b[0].index == 1);
        CHECK(b[0].count == 2);
        CHECK(b[0].mean_thp_mbps == 12.0);
        CHECK(b[0].latency_count == 1);
        CHECK(b[0].mean_latency_ms == 4.0);
    }
    SUBCASE("one point per bin keeps the point, empty bins omitted") {
        const std::vector<SeriesPoint> s{pt(1, 5.0, 3.0), pt(1, 35.0, 7.0)};
        const auto b = xapp::bin_by_distance(s, 10.0);
        REQUIRE(b.size() == 2);
        CHECK(b[0].mean_thp_mbps == 3.0);
        CHECK(b[1].index == 3);
        CHECK(b[1].mean_thp_mbps == 7.0);
        CHECK_FALSE(b[1].mean_latency_ms.has_value());
    }
    SUBCASE("half-open boundaries") {
        const std::vector<SeriesPoint> s{pt(1, 10.0, 1.0), pt(1, 9.999, 2.0), pt(1, 0.0, 3.0)};
        const auto b = xapp::bin_by_distance(s, 10.0);
        REQUIRE(b.size() == 2);
        CHECK(b[0].index == 0);
        CHECK(b[0].count == 2);
        CHECK(b[0].lo_m == 0.0);
        CHECK(b[0].hi_m == 10.0);
        CHECK(b[1].index == 1);
        CHECK(b[1].count == 1);
    }
    SUBCASE("sorted by UE then bin") {
        const std::vector<SeriesPoint> s{pt(2, 1.0, 1.0), pt(1, 25.0, 1.0), pt(1, 1.0, 1.0)};
        const auto b = xapp::bin_by_distance(s, 10.0);
        REQUIRE(b.size() == 3);
        CHECK(b[0].ue_id == 1);
        CHECK(b[0].index == 0);
        CHECK(b[1].index == 2);
        CHECK(b[2].ue_id == 2);
    }
    CHECK_THROWS_AS(xapp::bin_by_distance({}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(xapp::bin_by_distance({}, -1.0), std::invalid_argument);
}

TEST_CASE("property: bin counts add up to the series length") {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> h(0.0, 500.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SeriesPoint> s;
        for (size_t i = g() % 50; i > 0; --i) s.push_back(pt(1 + g() % 3, h(g), static_cast<double>(g() % 20)));
        const double bin = 1.0 + static_cast<double>(g() % 50);
        size_t total = 0;
        for (const auto& b : xapp::bin_by_distance(s, bin)) {
            total += b.count;
            CHECK(b.count > 0);
        }
        CHECK(total == s.size());
    }
}

TEST_CASE("series CSV") {
    SUBCASE("round trip is exact, absent latency stays absent") {
        std::vector<SeriesPoint> s{pt(1, 0.1 + 0.2, 1.0 / 3.0, 12.5), pt(2, 300.0, 0.0)};
        s[0].t_ms = 100;
        s[0].altitude_m = 120.0;
        s[1].t_ms = 200;
        const auto path = temp("rt.csv");
        xapp::export_series(s, path);
        CHECK(xapp::import_series(path) == s);
        const auto text = slurp(path);
        CHECK(text.substr(text.rfind(',', text.size() - 2)) == ",\n");
    }
    SUBCASE("empty series writes only the header") {
        const auto path = temp("empty.csv");
        xapp::export_series({}, path);
        CHECK(slurp(path) == std::string(xapp::kSeriesCsvHeader) + "\n");
        CHECK(xapp::import_series(path).empty());
    }
    SUBCASE("I/O errors name the path") {
        const auto bad = temp("no_such_dir") / "x.csv";
        try {
            xapp::export_series({}, bad);
            FAIL("expected an error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(bad.string()) != std::string::npos);
        }
        CHECK_THROWS_AS(xapp::import_series(bad), std::runtime_error);
    }
    CHECK_THROWS_AS(xapp::parse_series_csv("wrong\n"), std::invalid_argument);
    CHECK_THROWS_AS(xapp::parse_series_csv(std::string(xapp::kSeriesCsvHeader) + "\n1,2,3\n"),
                    std::invalid_argument);
}

TEST_CASE("series is a pure function of the indication stream") {
    rig::Rig r(temp("live.db"), false, rig::one_ue_node());
    const auto id = r.ric().register_xapp("kpm_mon");
    rig::Delivered d;
    REQUIRE(r.subscribe(id, kKpmFunctionId, 100, d).accepted);
    r.run_slots(2000);
    r.finish();
    REQUIRE(d.indications.size() == 10);

    KpmXapp live({0, 0, 0});
    live.own(d.sub_id);
    for (const auto& ind : d.indications) live.on_indication(ind);

    // replay in the same order, twice, plus the stored rows
    KpmXapp replay({0, 0, 0});
    replay.own(d.sub_id);
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& ind : d.indications) replay.on_indication(ind);
    }
    CHECK(xapp::format_series_csv(replay.series()) == xapp::format_series_csv(live.series()));
    CHECK(replay.duplicates_ignored() == 10);

    std::vector<SeriesPoint> from_store;
    for (const auto& row : r.store().all_rows()) from_store.push_back(xapp::derive_point(row.record, {0, 0, 0}));
    CHECK(xapp::format_series_csv(from_store) == xapp::format_series_csv(live.series()));
    CHECK(live.series().size() == r.store().row_count());
}
