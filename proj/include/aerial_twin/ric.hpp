#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aerial_twin/blocking_queue.hpp"
#include "aerial_twin/e2_codec.hpp"
#include "aerial_twin/metric_store.hpp"
#include "aerial_twin/transport.hpp"

namespace aerial_twin::ric {

enum class SubscriptionStatus { Pending, Active, Deleted };

struct SubscriptionState {
    uint32_t sub_id = 0;
    uint32_t owner = 0;  // xApp id
    uint16_t function_id = 0;
    uint32_t report_period_ms = 0;
    SubscriptionStatus status = SubscriptionStatus::Pending;
    uint64_t last_seq = 0;
};

/// RIC side of one E2 connection, free of I/O.
///
///   AwaitSetup --SetupRequest--> Established --violation--> Closed
///   per subscription: Pending --accepted--> Active --delete--> Deleted
///
/// Outputs split into bytes for the E2 node (`to_peer`) and events for the
/// RIC itself (`to_local`: SubscriptionResponse for the waiting xApp,
/// Indication for delivery, SubscriptionDelete when a subscription ends).
class E2ConnectionFsm {
public:
    enum class State { AwaitSetup, Established, Closed };

    struct Output {
        std::vector<e2::E2Message> to_peer;
        std::vector<e2::E2Message> to_local;
        bool close = false;
    };

    Output on_inbound(const e2::E2Message& msg);

    /// RIC-initiated subscription. Duplicate ids and unadvertised functions are
    /// answered locally and generate no E2 traffic.
    Output subscribe(uint32_t sub_id, uint32_t owner, uint16_t function_id, uint32_t period_ms);
    Output unsubscribe(uint32_t sub_id);

    /// Ends every live subscription, e.g. when the transport drops.
    Output shutdown();

    State state() const { return state_; }
    uint32_t node_id() const { return node_id_; }
    bool advertises(uint16_t function_id) const;
    const std::vector<e2::RanFunction>& functions() const { return functions_; }
    const std::map<uint32_t, SubscriptionState>& subscriptions() const { return subs_; }

private:
    Output violation(const std::string& detail);
    void end_all(Output& out);

    State state_ = State::AwaitSetup;
    uint32_t node_id_ = 0;
    std::vector<e2::RanFunction> functions_;
    std::map<uint32_t, SubscriptionState> subs_;
};

struct SubscribeResult {
    uint32_t sub_id = 0;
    bool accepted = false;
    uint8_t reason_code = 0;
};

struct RicStats {
    uint64_t indications_received = 0;
    uint64_t indications_stored = 0;
    uint64_t indications_delivered = 0;
    uint64_t records_stored = 0;
    uint64_t sequence_gaps = 0;
};

/// Near-RT RIC: terminates E2 connections, maps xApp subscriptions 1:1 onto E2
/// subscriptions, and stores every indication before handing it to its xApp.
class NearRtRic {
public:
    explicit NearRtRic(MetricStore& store, size_t delivery_capacity = 1024);
    ~NearRtRic();
    NearRtRic(const NearRtRic&) = delete;
    NearRtRic& operator=(const NearRtRic&) = delete;

    /// Serves an E2 node on its own thread.
    void attach(std::unique_ptr<transport::ByteStream> stream);

    /// Accepts E2 nodes from `listener` until shutdown().
    void listen(transport::TcpListener& listener);

    /// Blocks until `count` E2 nodes completed setup. Returns false on timeout.
    bool wait_for_nodes(size_t count, std::chrono::milliseconds timeout);

    uint32_t register_xapp(const std::string& name);

    /// Blocks until the E2 node answers. Rejected immediately (no E2 traffic)
    /// when no established node advertises `function_id`.
    SubscribeResult xapp_subscribe(uint32_t xapp_id, uint16_t function_id, uint32_t period_ms,
                                   std::chrono::milliseconds timeout = std::chrono::seconds(10));

    void xapp_unsubscribe(uint32_t sub_id);

    /// Next indication for `sub_id` in arrival order; nullopt once the
    /// subscription ended and its queue is drained.
    std::optional<e2::Indication> next_indication(uint32_t sub_id);

    /// Blocks until every E2 connection has ended.
    void wait_idle();

    void shutdown();

    RicStats stats() const;
    bool protocol_error() const { return protocol_error_; }

private:
    struct Connection {
        std::unique_ptr<transport::ByteStream> stream;
        E2ConnectionFsm fsm;
        std::mutex write_mu;
        std::thread thread;
        bool done = false;
    };

    struct Delivery {
        uint32_t owner = 0;
        std::shared_ptr<BlockingQueue<e2::Indication>> queue;
        std::promise<SubscribeResult> answer;
        bool answered = false;
    };

    void serve(Connection& conn);
    void handle_local(const std::vector<e2::E2Message>& events);
    void send(Connection& conn, const std::vector<e2::E2Message>& msgs);

    MetricStore& store_;
    size_t delivery_capacity_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::vector<std::unique_ptr<Connection>> connections_;
    std::map<uint32_t, std::string> xapps_;
    std::map<uint32_t, Delivery> deliveries_;
    std::map<uint32_t, Connection*> sub_owner_conn_;
    uint32_t next_xapp_id_ = 1;
    uint32_t next_sub_id_ = 1;
    RicStats stats_;
    std::atomic<bool> protocol_error_{false};

    transport::TcpListener* listener_ = nullptr;
    std::thread accept_thread_;
    bool stopping_ = false;
};

}  // namespace aerial_twin::ric
