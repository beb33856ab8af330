#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aerial_twin/metric_store.hpp"
#include "rig.hpp"

using namespace aerial_twin;
namespace fs = std::filesystem;

namespace {

fs::path temp(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "aerial_twin_test_ric";
    fs::create_directories(dir);
    return dir / name;
}

KpmRecord rec(uint64_t t, uint32_t ue) {
    KpmRecord r;
    r.t_ms = t;
    r.ue_id = ue;
    r.dl_thp_kbps = static_cast<uint32_t>(t * 10 + ue);
    return r;
}

void check_gapless(const rig::Delivered& d) {
    for (size_t i = 0; i < d.indications.size(); ++i) {
        CHECK(d.indications[i].sub_id == d.sub_id);
        CHECK(d.indications[i].seq == i + 1);
    }
}

}  // namespace

TEST_CASE("metric store queries") {
    ric::MetricStore store(temp("q.db"), ric::MetricStore::Mode::Create);
    CHECK(ric::query_metrics(store, std::nullopt, 0, 1000).empty());

    const std::vector<KpmRecord> a{rec(100, 1), rec(100, 2)};
    const std::vector<KpmRecord> b{rec(200, 1), rec(200, 2)};
    const std::vector<KpmRecord> c{rec(300, 1)};
    store.append(1, a);
    store.append(1, b);
    store.append(1, c);
    CHECK(store.row_count() == 5);

    const auto ue1 = ric::query_metrics(store, 1u, 0, 1000);
    REQUIRE(ue1.size() == 3);
    CHECK(ue1[0] == rec(100, 1));
    CHECK(ue1[2] == rec(300, 1));
    // half-open: a row at exactly t_end is excluded
    CHECK(ric::query_metrics(store, std::nullopt, 100, 300).size() == 4);
    CHECK(ric::query_metrics(store, std::nullopt, 300, 100).empty());
    CHECK(ric::query_metrics(store, 1u, 0, 1000) == ue1);
}

TEST_CASE("metric store dump and reopen") {
    const auto path = temp("d.db");
    {
        ric::MetricStore store(path, ric::MetricStore::Mode::Create, [] { return int64_t{42}; });
        auto r = rec(100, 1);
        r.sdu_latency_us = 1500;
        const std::vector<KpmRecord> rows{r, rec(100, 2)};
        store.append(7, rows);
    }
    ric::MetricStore ro(path, ric::MetricStore::Mode::ReadOnly);
    const auto rows = ro.all_rows();
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sub_id == 7);
    CHECK(rows[0].ingest_wall_ms == 42);
    CHECK(rows[0].record.sdu_latency_us == 1500u);
    CHECK_FALSE(rows[1].record.sdu_latency_us.has_value());
    ric::dump_csv(ro, temp("d.csv"));
    std::ifstream in(temp("d.csv"));
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "t_ms,ue_id,dl_thp_kbps,rb_count,sdu_latency_us,pos_x_cm,pos_y_cm,pos_z_cm,cqi,mcs,sub_id");
    CHECK(first == "100,1,1001,0,1500,0,0,0,1,1,7");
    CHECK_THROWS_AS(ric::MetricStore(temp("missing.db"), ric::MetricStore::Mode::ReadOnly), ric::StoreError);
}

TEST_CASE("xApp ids start at 1") {
    ric::MetricStore store(temp("x.db"), ric::MetricStore::Mode::Create);
    ric::NearRtRic ric(store);
    CHECK(ric.register_xapp("kpm_mon") == 1);
    CHECK(ric.register_xapp("other") == 2);
}

TEST_CASE("subscription without a node is rejected immediately") {
    ric::MetricStore store(temp("n.db"), ric::MetricStore::Mode::Create);
    ric::NearRtRic ric(store);
    const auto id = ric.register_xapp("kpm_mon");
    const auto r = ric.xapp_subscribe(id, kKpmFunctionId, 100, std::chrono::milliseconds(50));
    CHECK_FALSE(r.accepted);
    CHECK(r.reason_code == static_cast<uint8_t>(e2::ReasonCode::NoNode));
}

TEST_CASE("end to end over both transports") {
    for (bool socket : {false, true}) {
        CAPTURE(socket);
        rig::Rig r(temp(socket ? "s.db" : "i.db"), socket, rig::one_ue_node());
        const auto xapp = r.ric().register_xapp("kpm_mon");

        SUBCASE("unknown function: rejected without E2 traffic") {
            rig::Delivered d;
            const auto res = r.subscribe(xapp, 99, 100, d);
            CHECK_FALSE(res.accepted);
            CHECK(r.agent().active_subscriptions() == 0);
            r.finish();
        }
        SUBCASE("100 ms over 1 s: 10 gapless indications, store equals delivery") {
            rig::Delivered d;
            REQUIRE(r.subscribe(xapp, kKpmFunctionId, 100, d).accepted);
            r.run_slots(2000);
            r.finish();
            REQUIRE(d.indications.size() == 10);
            check_gapless(d);
            std::vector<KpmRecord> delivered;
            for (const auto& ind : d.indications) {
                delivered.insert(delivered.end(), ind.records.begin(), ind.records.end());
            }
            CHECK(ric::query_metrics(r.store(), std::nullopt, 0, UINT64_MAX) == delivered);
            const auto s = r.ric().stats();
            CHECK(s.indications_received == 10);
            CHECK(s.indications_stored == 10);
            CHECK(s.indications_delivered == 10);
            CHECK(s.sequence_gaps == 0);
            CHECK(d.indications.front().records.front().t_ms == 100);
            CHECK(d.indications.back().records.front().t_ms == 1000);
        }
        SUBCASE("100 ms and 250 ms: 10 and 4 indications, stored in time order") {
            rig::Delivered a, b;
            REQUIRE(r.subscribe(xapp, kKpmFunctionId, 100, a).accepted);
            REQUIRE(r.subscribe(xapp, kKpmFunctionId, 250, b).accepted);
            r.run_slots(2000);
            r.finish();
            CHECK(a.indications.size() == 10);
            CHECK(b.indications.size() == 4);
            check_gapless(a);
            check_gapless(b);
            const auto rows = r.store().all_rows();
            CHECK(rows.size() == 14);
            for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].record.t_ms <= rows[i].record.t_ms);
        }
        SUBCASE("unsubscribe stops the flow") {
            rig::Delivered d;
            REQUIRE(r.subscribe(xapp, kKpmFunctionId, 100, d).accepted);
            r.run_slots(1000);
            for (int i = 0; i < 400 && r.ric().stats().indications_delivered < 5; ++i) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
            r.ric().xapp_unsubscribe(d.sub_id);
            // let the delete reach the node before more slots run
            for (int i = 0; i < 200 && r.agent().active_subscriptions() > 0; ++i) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
                r.agent().apply_pending(r.node());
            }
            r.run_slots(1000);
            r.finish();
            CHECK(d.indications.size() == 5);
            check_gapless(d);
        }
    }
}

TEST_CASE("a malformed frame from the node flags a protocol error") {
    ric::MetricStore store(temp("m.db"), ric::MetricStore::Mode::Create);
    ric::NearRtRic ric(store);
    auto [ric_end, node_end] = transport::make_inproc_pair();
    ric.attach(std::move(ric_end));
    const std::vector<uint8_t> junk{0, 0, 0, 1, 0x42};
    node_end->write_all(junk);
    const auto reply = transport::recv_message(*node_end);
    REQUIRE(reply.has_value());
    CHECK(std::get<e2::ErrorIndication>(*reply).code == static_cast<uint8_t>(e2::ErrorCode::DecodeFailure));
    node_end->close();
    ric.wait_idle();
    CHECK(ric.protocol_error());
}
