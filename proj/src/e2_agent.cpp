#include "aerial_twin/e2_agent.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace aerial_twin::ran {

using namespace aerial_twin::e2;

E2AgentFsm::E2AgentFsm(uint32_t node_id, std::vector<RanFunction> functions)
    : node_id_(node_id), functions_(std::move(functions)) {}

E2Message E2AgentFsm::start() {
    state_ = State::SetupSent;
    return SetupRequest{node_id_, functions_};
}

E2AgentFsm::Output E2AgentFsm::violation(const std::string& detail) {
    state_ = State::Closed;
    Output out;
    out.to_peer.push_back(ErrorIndication{static_cast<uint8_t>(ErrorCode::ProtocolViolation), detail});
    out.close = true;
    for (const auto& [id, sub] : subs_) out.removed.push_back(id);
    subs_.clear();
    return out;
}

E2AgentFsm::Output E2AgentFsm::on_inbound(const E2Message& msg) {
    Output out;
    if (state_ == State::Closed) return out;

    if (const auto* err = std::get_if<ErrorIndication>(&msg)) {
        spdlog::warn("e2 agent: RIC reported error {}: {}", err->code, err->detail);
        state_ = State::Closed;
        out.close = true;
        return out;
    }

    if (state_ == State::SetupSent) {
        if (std::holds_alternative<SetupResponse>(msg)) {
            state_ = State::Established;
            return out;
        }
        return violation(std::string("expected SetupResponse, got ") + to_string(type_of(msg)));
    }
    if (state_ != State::Established) {
        return violation(std::string("unexpected ") + to_string(type_of(msg)) + " before setup");
    }

    if (const auto* req = std::get_if<SubscriptionRequest>(&msg)) {
        SubscriptionResponse resp{req->sub_id, false, static_cast<uint8_t>(ReasonCode::Ok)};
        const bool known = std::any_of(functions_.begin(), functions_.end(), [&](const RanFunction& f) {
            return f.function_id == req->function_id;
        });
        if (!known) {
            resp.reason_code = static_cast<uint8_t>(ReasonCode::UnknownFunction);
        } else if (req->report_period_ms == 0) {
            resp.reason_code = static_cast<uint8_t>(ReasonCode::InvalidPeriod);
        } else if (subs_.contains(req->sub_id)) {
            resp.reason_code = static_cast<uint8_t>(ReasonCode::DuplicateSubId);
        } else {
            resp.accepted = true;
            Subscription sub{req->sub_id, req->function_id, req->report_period_ms, 1};
            subs_.emplace(sub.sub_id, sub);
            out.activated.push_back(sub);
        }
        out.to_peer.push_back(resp);
        return out;
    }
    if (const auto* del = std::get_if<SubscriptionDelete>(&msg)) {
        if (subs_.erase(del->sub_id) > 0) out.removed.push_back(del->sub_id);
        return out;
    }
    return violation(std::string("unexpected ") + to_string(type_of(msg)) + " at E2 node");
}

Indication E2AgentFsm::make_indication(uint32_t sub_id, std::vector<KpmRecord> records) {
    auto it = subs_.find(sub_id);
    if (it == subs_.end()) throw std::out_of_range("no active subscription " + std::to_string(sub_id));
    return Indication{sub_id, it->second.next_seq++, std::move(records)};
}

E2Agent::E2Agent(std::unique_ptr<transport::ByteStream> stream, uint32_t node_id)
    : stream_(std::move(stream)), fsm_(node_id, {RanFunction{kKpmFunctionId, "ORAN-E2SM-KPM"}}) {}

E2Agent::~E2Agent() {
    close();
    if (reader_.joinable()) reader_.join();
}

void E2Agent::send(const E2Message& msg) {
    std::lock_guard lock(write_mu_);
    transport::send_message(*stream_, msg);
}

void E2Agent::connect() {
    E2Message setup;
    {
        std::lock_guard lock(fsm_mu_);
        setup = fsm_.start();
    }
    send(setup);
    auto reply = transport::recv_message(*stream_);
    if (!reply) throw transport::TransportError("RIC closed the connection during setup");
    E2AgentFsm::Output out;
    {
        std::lock_guard lock(fsm_mu_);
        out = fsm_.on_inbound(*reply);
    }
    for (const auto& m : out.to_peer) send(m);
    if (fsm_.state() != E2AgentFsm::State::Established) {
        throw std::runtime_error("E2 setup failed");
    }
    reader_ = std::thread([this] { reader_loop(); });
}

void E2Agent::reader_loop() {
    try {
        while (auto msg = transport::recv_message(*stream_)) {
            E2AgentFsm::Output out;
            {
                std::lock_guard lock(fsm_mu_);
                out = fsm_.on_inbound(*msg);
                for (const auto& sub : out.activated) pending_add_.push_back(sub);
                for (uint32_t id : out.removed) pending_remove_.push_back(id);
            }
            for (const auto& m : out.to_peer) send(m);
            if (out.close) {
                failed_ = true;
                stream_->close();
                return;
            }
        }
    } catch (const std::exception& e) {
        // a close() from our own side also lands here; only report real failures
        if (!failed_) spdlog::debug("e2 agent reader stopped: {}", e.what());
    }
}

void E2Agent::apply_pending(const RanNode& node) {
    std::lock_guard lock(fsm_mu_);
    for (uint32_t id : pending_remove_) active_.erase(id);
    pending_remove_.clear();
    for (const auto& sub : pending_add_) {
        Active a;
        a.sub = sub;
        a.window = node.open_window();
        a.next_emit_us = node.now_us() + uint64_t{sub.report_period_ms} * 1000;
        active_[sub.sub_id] = std::move(a);
    }
    pending_add_.clear();
}

void E2Agent::on_slot_end(const RanNode& node) {
    for (auto& [id, a] : active_) {
        if (node.now_us() < a.next_emit_us) continue;
        auto records = node.collect_kpm(a.window);
        Indication ind;
        {
            std::lock_guard lock(fsm_mu_);
            if (!fsm_.subscriptions().contains(id)) continue;
            ind = fsm_.make_indication(id, std::move(records));
        }
        a.next_emit_us += uint64_t{a.sub.report_period_ms} * 1000;
        send(ind);
        ++indications_sent_;
    }
}

void E2Agent::close() {
    if (stream_) stream_->close();
}

size_t E2Agent::active_subscriptions() const {
    std::lock_guard lock(fsm_mu_);
    return active_.size() + pending_add_.size();
}

}  // namespace aerial_twin::ran
