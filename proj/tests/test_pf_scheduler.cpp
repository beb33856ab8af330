#include <doctest.h>

#include <cmath>
#include <random>

#include "aerial_twin/pf_scheduler.hpp"
#include "oracles.hpp"

using namespace aerial_twin;
using namespace aerial_twin::mac;

namespace {

constexpr double kSlotS = 0.0005;

SchedUeState ue(uint32_t id, uint8_t cqi, double ewma, uint64_t backlog, uint32_t demand) {
    SchedUeState s;
    s.ue_id = id;
    s.cqi = cqi;
    s.ewma_rate_bps = ewma;
    s.backlog_bits = backlog;
    s.rb_demand = demand;
    return s;
}

std::vector<uint32_t> rbs(const Allocation& a) {
    std::vector<uint32_t> out;
    for (const auto& g : a.grants) out.push_back(g.rb_count);
    return out;
}

}  // namespace

TEST_CASE("transport block sizes") {
    // 106*12*12 = 15264 RE, times 5.55 = 84715.2
    CHECK(tb_bits(106, 12, 5.55) == 84715);
    CHECK(tb_bits(0, 12, 5.55) == 0);
    CHECK(tb_bits(1, 12, 0.15) == 21);
    CHECK(select_mcs(7) == 7);
    CHECK(rb_demand(0, 12, 1.0) == 0);
    CHECK(rb_demand(144, 12, 1.0) == 1);
    CHECK(rb_demand(145, 12, 1.0) == 2);
}

TEST_CASE("PF coefficient") {
    // 10 Mb/s achievable over 2 Mb/s served
    const auto a = ue(1, 15, 2e6, 1000, 1);
    CHECK(pf_coefficient(a, 10e6, 106) == doctest::Approx(5.0));
    const auto lo = ue(1, 15, 10e6, 1000, 4);
    const auto hi = ue(2, 15, 2e6, 1000, 4);
    CHECK(pf_coefficient(hi, 1e6, 106) > pf_coefficient(lo, 1e6, 106));
    CHECK(pf_coefficient(ue(1, 15, 2e6, 0, 0), 1e6, 106) == 0.0);
}

TEST_CASE("schedule examples") {
    const SchedConfig cfg;
    const channel::ChannelParams ch;
    {
        std::vector<SchedUeState> u{ue(1, 10, 1e6, 50000, 5)};
        CHECK(rbs(pf_schedule(u, 12, kSlotS, 106, cfg, ch)) == std::vector<uint32_t>{5});
    }
    {
        std::vector<SchedUeState> u{ue(1, 10, 10e6, 1u << 30, 106), ue(2, 10, 2e6, 1u << 30, 106)};
        CHECK(rbs(pf_schedule(u, 12, kSlotS, 106, cfg, ch)) == std::vector<uint32_t>{0, 106});
    }
    {
        const std::vector<double> coef{3, 2, 1};
        const std::vector<uint32_t> dem{4, 4, 4}, ids{1, 2, 3};
        CHECK(greedy_allocate(coef, dem, ids, 10) == std::vector<uint32_t>{4, 4, 2});
    }
}

TEST_CASE("EWMA update") {
    CHECK(update_ewma(1e6, 0, 100, kSlotS, 1000.0) == doctest::Approx(0.99e6));
    CHECK(update_ewma(1000.0, 0, 100, kSlotS, 1000.0) == 1000.0);
    double r = 1000.0;
    const uint64_t served = 5000;  // 10 Mb/s
    for (int i = 0; i < 500; ++i) r = update_ewma(r, served, 100, kSlotS, 1000.0);
    CHECK(r == doctest::Approx(10e6).epsilon(0.01));
}

TEST_CASE("matches brute-force greedy replay on small instances") {
    std::mt19937_64 gen(2024);
    const SchedConfig cfg;
    const channel::ChannelParams ch;
    for (int inst = 0; inst < 1000; ++inst) {
        const uint32_t n_prb = 1 + gen() % 12;
        const size_t n = 1 + gen() % 4;
        const uint32_t data_symbols = 1 + gen() % 12;
        std::vector<SchedUeState> in;
        std::vector<oracle::UeIn> ref;
        for (size_t i = 0; i < n; ++i) {
            const auto cqi = static_cast<uint8_t>(1 + gen() % 15);
            // a coarse EWMA grid makes ties common
            const double ewma = 1000.0 * static_cast<double>(1 + gen() % 4);
            const uint32_t demand = gen() % 15;
            auto s = ue(static_cast<uint32_t>(10 - i), cqi, ewma, demand > 0 ? 1 : 0, demand);
            if (gen() % 4 == 0) s.rb_cap = 1 + gen() % 5;
            in.push_back(s);
            ref.push_back({s.ue_id, ch.cqi_table[cqi - 1], ewma, demand, s.rb_cap});
        }
        const auto got = rbs(pf_schedule(in, data_symbols, kSlotS, n_prb, cfg, ch));
        const auto want = oracle::greedy_rbs(ref, n_prb, data_symbols, kSlotS);
        CHECK(got == want);
    }
}

TEST_CASE("properties: conservation, demand satisfaction, argmax invariance") {
    std::mt19937_64 gen(77);
    const SchedConfig cfg;
    const channel::ChannelParams ch;
    for (int inst = 0; inst < 2000; ++inst) {
        const uint32_t n_prb = 1 + gen() % 106;
        const size_t n = 1 + gen() % 6;
        std::vector<SchedUeState> in;
        uint32_t total = 0;
        for (size_t i = 0; i < n; ++i) {
            const uint32_t demand = gen() % 40;
            total += demand;
            in.push_back(ue(static_cast<uint32_t>(i + 1), static_cast<uint8_t>(1 + gen() % 15),
                            1000.0 + static_cast<double>(gen() % 20'000'000), demand == 0 ? 0 : 100, demand));
        }
        const auto a = pf_schedule(in, 12, kSlotS, n_prb, cfg, ch);
        CHECK(a.total_rbs() <= n_prb);
        for (size_t i = 0; i < n; ++i) {
            if (a.grants[i].rb_count > 0) CHECK(in[i].backlog_bits > 0);
            if (total <= n_prb) CHECK(a.grants[i].rb_count == in[i].rb_demand);
        }
        auto scaled = in;
        for (auto& s : scaled) s.ewma_rate_bps *= 4.0;
        CHECK(rbs(pf_schedule(scaled, 12, kSlotS, n_prb, cfg, ch)) == rbs(a));
    }
}

TEST_CASE("long-run fairness of two saturated UEs") {
    const SchedConfig cfg;
    const channel::ChannelParams ch;
    std::vector<SchedUeState> u{ue(1, 9, cfg.ewma_floor_bps, 1u << 30, 106),
                                ue(2, 9, cfg.ewma_floor_bps, 1u << 30, 106)};
    uint64_t cum[2] = {0, 0};
    for (int slot = 0; slot < 10000; ++slot) {
        const auto a = pf_schedule(u, 12, kSlotS, 106, cfg, ch);
        CHECK(a.total_rbs() <= 106);
        for (int i = 0; i < 2; ++i) {
            cum[i] += a.grants[i].rb_count;
            u[i].ewma_rate_bps =
                update_ewma(u[i].ewma_rate_bps, a.grants[i].tb_bits, cfg.ewma_window_slots, kSlotS, cfg.ewma_floor_bps);
        }
    }
    const double diff = std::abs(static_cast<double>(cum[0]) - static_cast<double>(cum[1]));
    CHECK(diff / static_cast<double>(std::max(cum[0], cum[1])) <= 0.01);
    CHECK(cum[0] + cum[1] == 106u * 10000u);
}
