#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "aerial_twin/e2_codec.hpp"
#include "aerial_twin/ran_node.hpp"
#include "aerial_twin/transport.hpp"

namespace aerial_twin::ran {

/// Node side of the E2 exchange, free of I/O.
class E2AgentFsm {
public:
    enum class State { Idle, SetupSent, Established, Closed };

    struct Subscription {
        uint32_t sub_id = 0;
        uint16_t function_id = 0;
        uint32_t report_period_ms = 0;
        uint64_t next_seq = 1;
    };

    struct Output {
        std::vector<e2::E2Message> to_peer;
        std::vector<Subscription> activated;
        std::vector<uint32_t> removed;
        bool close = false;
    };

    E2AgentFsm(uint32_t node_id, std::vector<e2::RanFunction> functions);

    e2::E2Message start();
    Output on_inbound(const e2::E2Message& msg);

    /// Wraps `records` into the next Indication of an active subscription.
    e2::Indication make_indication(uint32_t sub_id, std::vector<KpmRecord> records);

    State state() const { return state_; }
    const std::map<uint32_t, Subscription>& subscriptions() const { return subs_; }

private:
    Output violation(const std::string& detail);

    uint32_t node_id_;
    std::vector<e2::RanFunction> functions_;
    State state_ = State::Idle;
    std::map<uint32_t, Subscription> subs_;
};

/// E2 agent bound to a transport. A reader thread answers the RIC at once;
/// subscription changes reach the slot loop only through apply_pending(), and
/// indications are only emitted from on_slot_end(), so the protocol never
/// perturbs the simulation.
class E2Agent {
public:
    E2Agent(std::unique_ptr<transport::ByteStream> stream, uint32_t node_id);
    ~E2Agent();
    E2Agent(const E2Agent&) = delete;
    E2Agent& operator=(const E2Agent&) = delete;

    /// Sends SetupRequest and blocks for the SetupResponse, then starts serving.
    /// Throws transport::TransportError or std::runtime_error on failure.
    void connect();

    /// Opens report windows for subscriptions accepted since the last call and
    /// drops deleted ones. Call at a slot boundary.
    void apply_pending(const RanNode& node);

    /// Emits every Indication whose period ends at the node's current time.
    void on_slot_end(const RanNode& node);

    /// Closes the transport; the RIC sees end-of-stream.
    void close();

    size_t active_subscriptions() const;
    uint64_t indications_sent() const { return indications_sent_; }
    bool failed() const { return failed_; }

private:
    struct Active {
        E2AgentFsm::Subscription sub;
        KpmWindow window;
        uint64_t next_emit_us = 0;
    };

    void reader_loop();
    void send(const e2::E2Message& msg);

    std::unique_ptr<transport::ByteStream> stream_;
    E2AgentFsm fsm_;
    mutable std::mutex fsm_mu_;
    std::mutex write_mu_;
    std::vector<E2AgentFsm::Subscription> pending_add_;
    std::vector<uint32_t> pending_remove_;
    std::map<uint32_t, Active> active_;
    std::thread reader_;
    std::atomic<bool> failed_{false};
    uint64_t indications_sent_ = 0;
};

}  // namespace aerial_twin::ran
