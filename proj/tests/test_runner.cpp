#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "aerial_twin/datagen.hpp"
#include "aerial_twin/runner.hpp"

using namespace aerial_twin;
using namespace aerial_twin::expcli;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = AT_SCENARIO_DIR;

fs::path work(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "aerial_twin_test_runner" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

/// Every regular file in `dir`, by name.
std::map<std::string, std::string> contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
    return out;
}

Scenario one_ue(double duration_s) {
    auto sc = load_scenario(kDir / "saturation.json");
    sc.duration_s = duration_s;
    sc.ues.resize(1);
    return sc;
}

}  // namespace

TEST_CASE("sha256 of a known string") {
    const auto p = work("sha") / "abc.txt";
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << "abc";
    CHECK(sha256_hex(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("1 s at 100 ms with one UE gives 10 points") {
    const auto art = run(one_ue(1.0), work("count"));
    CHECK(art.series.size() == 10);
    CHECK(art.indications == 10);
    CHECK(art.series.front().t_ms == 100);
    CHECK(art.series.back().t_ms == 1000);
    CHECK(xapp::import_series(art.series_csv) == art.series);
}

TEST_CASE("same seed: byte-identical outputs across runs and transports") {
    auto sc = load_scenario(kDir / "fig3_hover.json");
    sc.duration_s = 3.0;
    const auto a = run(sc, work("det_a"));
    const auto b = run(sc, work("det_b"));
    const auto c = run(sc, work("det_c"), {.seed = std::nullopt, .transport = TransportKind::Socket});
    const auto fa = contents(a.manifest.parent_path());
    CHECK(fa.size() == 6);  // db, kpm, series, summary, one curve, manifest
    CHECK(fa == contents(b.manifest.parent_path()));
    CHECK(fa == contents(c.manifest.parent_path()));

    const auto d = run(sc, work("det_d"), {.seed = 8, .transport = std::nullopt});
    CHECK(slurp(d.series_csv) != slurp(a.series_csv));
}

TEST_CASE("manifest lists every output with its hash") {
    const auto art = run(one_ue(0.5), work("manifest"));
    std::ifstream f(art.manifest);
    std::string line;
    std::getline(f, line);
    CHECK(line == "status complete");
    std::vector<std::string> names;
    while (std::getline(f, line)) {
        const auto sep = line.find("  ");
        REQUIRE(sep == 64);
        const auto name = line.substr(sep + 2);
        CHECK(line.substr(0, 64) == sha256_hex(art.manifest.parent_path() / name));
        names.push_back(name);
    }
    CHECK(names == std::vector<std::string>{"metrics.db", "kpm.csv", "series.csv", "summary.txt", "curve_ue1.csv"});
}

TEST_CASE("fig4 covers the whole path") {
    const auto art = run(load_scenario(kDir / "fig4_flythrough.json"), work("fig4"));
    double lo = 1e9, hi = 0.0;
    for (const auto& p : art.series) {
        lo = std::min(lo, p.horizontal_m);
        hi = std::max(hi, p.horizontal_m);
        CHECK(p.altitude_m == doctest::Approx(120.0));
    }
    CHECK(art.series.size() == 600);
    CHECK(lo <= 1.0);
    CHECK(hi == doctest::Approx(300.0));
    REQUIRE(art.curves.size() == 1);
    CHECK_NOTHROW(datagen::read_curve(art.curves[0]));
}

TEST_CASE("summary") {
    SUBCASE("all-zero traffic gives zero rows") {
        auto sc = one_ue(1.0);
        sc.ues[0].offered_load_bps = 0.0;
        const auto art = run(sc, work("zero"));
        REQUIRE(art.summary.ues.size() == 1);
        const auto& u = art.summary.ues[0];
        CHECK(u.points == 10);
        CHECK(u.mean_thp_mbps == 0.0);
        CHECK(u.min_thp_mbps == 0.0);
        CHECK(u.max_thp_mbps == 0.0);
        CHECK(u.rb_total == 0);
        CHECK_FALSE(u.mean_latency_ms.has_value());
    }
    SUBCASE("a UE without points still gets a row") {
        auto sc = one_ue(1.0);
        const auto s = summarize({}, sc);
        REQUIRE(s.ues.size() == 1);
        CHECK(s.ues[0].points == 0);
    }
    SUBCASE("formatted table carries min throughput and the bins") {
        const auto art = run(one_ue(1.0), work("fmt"));
        const auto text = slurp(art.summary_txt);
        CHECK(text.find("min") != std::string::npos);
        CHECK(text == format_summary(art.summary, one_ue(1.0)));
        CHECK_FALSE(art.summary.bins.empty());
        const auto& u = art.summary.ues[0];
        CHECK(u.min_thp_mbps <= u.mean_thp_mbps);
        CHECK(u.mean_thp_mbps <= u.max_thp_mbps);
    }
}

TEST_CASE("unwritable output directory is an I/O failure") {
    const auto file = work("blocker");
    fs::create_directories(file.parent_path());
    std::ofstream(file) << "x";
    CHECK_THROWS_AS(run(one_ue(0.1), file / "out"), IoFailure);
}

TEST_CASE("plots are static SVG files") {
    const auto art = run(one_ue(1.0), work("plot"));
    const auto files = plot_series(art.series, work("plot_out"));
    CHECK(files.size() == 4);
    for (const auto& f : files) {
        CHECK(f.extension() == ".svg");
        CHECK(slurp(f).find("<svg") != std::string::npos);
    }
}
