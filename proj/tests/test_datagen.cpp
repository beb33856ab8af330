#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "aerial_twin/datagen.hpp"

using namespace aerial_twin;
using namespace aerial_twin::datagen;
namespace fs = std::filesystem;

namespace {

DatagenConfig default_cfg() { return make_config({}, {}, {}); }

MeasuredCurve random_curve(std::mt19937_64& g, double load) {
    MeasuredCurve c;
    c.power_dbm = -27.0;
    c.offered_load_mbps = load;
    double h = 0.0;
    std::uniform_real_distribution<double> thp(0.0, load);
    for (size_t i = 1 + g() % 40; i > 0; --i) {
        h += 1.0 + static_cast<double>(g() % 20);
        // a quarter of the points sit at the cap
        c.points.push_back({h, g() % 4 == 0 ? load : thp(g)});
    }
    return c;
}

}  // namespace

TEST_CASE("carrier capacity per unit efficiency") {
    // 106 PRB x 12 subcarriers x (7 x 12 + 6 - 2) data symbols per 5 ms
    CHECK(default_cfg().capacity_bps_per_eff == 106.0 * 12 * 88 * 200);
}

TEST_CASE("rate model passes through the CQI table") {
    const channel::ChannelParams p;
    const RateModel m(p);
    for (uint8_t cqi = 1; cqi <= 15; ++cqi) {
        const double centre = p.snr_min_db + (cqi - 0.5) * p.cqi_step_db;
        CHECK(channel::snr_to_cqi(centre, p) == cqi);
        CHECK(m.efficiency(centre) == doctest::Approx(channel::cqi_to_efficiency(cqi, p)));
        CHECK(m.snr_for_efficiency(m.efficiency(centre)) == doctest::Approx(centre));
    }
    CHECK(m.efficiency(-100.0) == 0.0);
    CHECK(m.efficiency(100.0) == p.cqi_table.back());
}

TEST_CASE("inversion examples") {
    const auto cfg = default_cfg();
    const channel::ChannelParams p;
    SUBCASE("forward through the simulator chain, then invert: within one CQI step") {
        for (double snr = -4.0; snr <= 20.0; snr += 0.25) {
            CAPTURE(snr);
            const double eff = channel::cqi_to_efficiency(channel::snr_to_cqi(snr, p), p);
            const double mbps = eff * cfg.capacity_bps_per_eff / 1e6;
            const double back = invert_rate_to_snr({0.0, mbps}, 1e6, cfg);
            CHECK(std::abs(back - snr) <= p.cqi_step_db);
        }
        const double eff = channel::cqi_to_efficiency(channel::snr_to_cqi(10.0, p), p);
        CHECK(std::abs(invert_rate_to_snr({0.0, eff * cfg.capacity_bps_per_eff / 1e6}, 1e6, cfg) - 10.0) <= 2.0);
    }
    SUBCASE("a point at the offered load has no inverse") {
        CHECK_THROWS_AS(invert_rate_to_snr({10.0, 18.0}, 18.0, cfg), CappedPointError);
        CHECK_THROWS_AS(invert_rate_to_snr({10.0, 17.9}, 18.0, cfg), CappedPointError);
        CHECK_NOTHROW(invert_rate_to_snr({10.0, 17.0}, 18.0, cfg));
    }
    SUBCASE("zero throughput maps to the bottom of the table") {
        CHECK(invert_rate_to_snr({500.0, 0.0}, 18.0, cfg) <= p.snr_min_db);
    }
}

TEST_CASE("power shift examples") {
    const auto cfg = default_cfg();
    MeasuredCurve c{-27.0, 18.0, {{0, 18.0}, {50, 12.0}, {100, 6.0}, {200, 1.0}, {300, 0.0}}};

    CHECK(power_shift_curve(c, -27.0, cfg) == c);

    const auto up = power_shift_curve(c, -21.0, cfg);
    CHECK(up.power_dbm == -21.0);
    REQUIRE(up.points.size() == c.points.size());
    for (size_t i = 0; i < c.points.size(); ++i) {
        CHECK(up.points[i].horizontal_m == c.points[i].horizontal_m);
        CHECK(up.points[i].throughput_mbps >= c.points[i].throughput_mbps);
        CHECK(up.points[i].throughput_mbps <= 18.0);
    }
    CHECK(up.points[0].throughput_mbps == 18.0);
    CHECK(up.points[2].throughput_mbps > 6.0);

    // a capped point is re-derived from the cap boundary when power drops
    const auto down = power_shift_curve(c, -33.0, cfg);
    CHECK(down.points[0].throughput_mbps < 18.0);
    CHECK(down.points[0].throughput_mbps > down.points[1].throughput_mbps);
}

TEST_CASE("property: power monotonicity") {
    const auto cfg = default_cfg();
    std::mt19937_64 g(21);
    for (int trial = 0; trial < 500; ++trial) {
        const auto c = random_curve(g, 18.0);
        const double delta = static_cast<double>(g() % 200) / 10.0;
        const auto out = power_shift_curve(c, c.power_dbm + delta, cfg);
        CHECK_NOTHROW(validate(out));
        for (size_t i = 0; i < c.points.size(); ++i) {
            CHECK(out.points[i].throughput_mbps >= c.points[i].throughput_mbps - 1e-9);
        }
    }
}

TEST_CASE("property: composition within one CQI step") {
    const auto cfg = default_cfg();
    const RateModel m(cfg.channel);
    // implied SNR without the cap check; capped values map to the cap SNR
    auto snr_of = [&](double mbps) { return m.snr_for_efficiency(mbps * 1e6 / cfg.capacity_bps_per_eff); };
    auto clipped = [&](double mbps) { return mbps <= 0.0 || is_capped(mbps, 18.0, cfg); };
    std::mt19937_64 g(22);
    std::uniform_real_distribution<double> d(0.0, 10.0);
    size_t checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto c = random_curve(g, 18.0);
        double d1 = d(g), d2 = d(g);
        // same-sign pairs compose everywhere; mixed pairs only where the first shift did not clip
        const bool mixed = trial % 2 == 1;
        if (g() % 2 == 0) d1 = -d1;
        d2 = mixed ? -std::copysign(d2, d1) : std::copysign(d2, d1);
        const auto mid = power_shift_curve(c, c.power_dbm + d1, cfg);
        const auto two = power_shift_curve(mid, c.power_dbm + d1 + d2, cfg);
        const auto one = power_shift_curve(c, c.power_dbm + d1 + d2, cfg);
        for (size_t i = 0; i < c.points.size(); ++i) {
            if (mixed && (clipped(mid.points[i].throughput_mbps) || clipped(c.points[i].throughput_mbps))) continue;
            ++checked;
            CHECK(std::abs(snr_of(two.points[i].throughput_mbps) - snr_of(one.points[i].throughput_mbps)) <=
                  cfg.channel.cqi_step_db + 1e-9);
        }
    }
    CHECK(checked > 5000);
}

TEST_CASE("score examples") {
    const auto cfg = default_cfg();
    const MeasuredCurve oracle{-21.0, 18.0, {{10, 18.0}, {20, 10.0}, {30, 8.0}, {40, 4.0}, {50, 2.0}}};
    const auto same = score_generated(oracle, oracle, cfg);
    CHECK(same.median_rel_err == 0.0);
    CHECK(same.max_rel_err == 0.0);
    CHECK(same.fraction_within_10pct == 1.0);
    CHECK(same.points == 4);  // the capped point is skipped

    auto scaled = oracle;
    for (auto& p : scaled.points) p.throughput_mbps *= 1.05;
    const auto s = score_generated(scaled, oracle, cfg);
    CHECK(s.median_rel_err == doctest::Approx(0.05));
    CHECK(s.max_rel_err == doctest::Approx(0.05));

    // generated curve on a different grid is interpolated
    const MeasuredCurve coarse{-21.0, 18.0, {{20, 10.0}, {40, 4.0}}};
    CHECK(score_generated(coarse, oracle, cfg).median_rel_err == doctest::Approx(0.0));

    const MeasuredCurve far{-21.0, 18.0, {{100, 1.0}, {200, 1.0}}};
    CHECK_THROWS_AS(score_generated(far, oracle, cfg), std::invalid_argument);
    CHECK_THROWS_AS(score_generated({}, oracle, cfg), std::invalid_argument);
}

TEST_CASE("curve validation and CSV") {
    CHECK_THROWS_AS(validate({0, 18, {{10, 1}, {10, 2}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate({0, 18, {{10, 19}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate({0, 18, {{10, -1}}}), std::invalid_argument);

    const MeasuredCurve c{-27.0, 18.0, {{5, 18.0}, {15, 0.1 + 0.2}, {25, 0.0}}};
    const auto text = format_curve_csv(c);
    CHECK(text.rfind("# power_dbm=-27 offered_load_mbps=18\nhorizontal_m,throughput_mbps\n", 0) == 0);
    CHECK(parse_curve_csv(text) == c);
    const auto path = fs::temp_directory_path() / "aerial_twin_curve.csv";
    write_curve(c, path);
    CHECK(read_curve(path) == c);
    CHECK_THROWS_AS(parse_curve_csv("horizontal_m,throughput_mbps\n1,2\n"), std::invalid_argument);
    CHECK_THROWS_AS(read_curve(path.string() + ".missing"), std::runtime_error);
}

TEST_CASE("curve from an xApp series") {
    std::vector<xapp::SeriesPoint> s(4);
    s[0] = {0, 1, 3.0, 120.0, 10.0, 0, {}};
    s[1] = {0, 1, 7.0, 120.0, 14.0, 0, {}};
    s[2] = {0, 1, 25.0, 120.0, 30.0, 0, {}};
    s[3] = {0, 2, 5.0, 1.0, 1.0, 0, {}};
    const auto c = curve_from_series(s, 1, 10.0, -27.0, 18.0);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0] == CurvePoint{5.0, 12.0});
    CHECK(c.points[1] == CurvePoint{25.0, 18.0});
    CHECK_NOTHROW(validate(c));
}
