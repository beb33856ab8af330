#include "aerial_twin/ric.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace aerial_twin::ric {

using namespace aerial_twin::e2;

namespace {

SubscriptionResponse rejection(uint32_t sub_id, ReasonCode reason) {
    return SubscriptionResponse{sub_id, false, static_cast<uint8_t>(reason)};
}

}  // namespace

// ---------------------------------------------------------------------------
// E2ConnectionFsm

bool E2ConnectionFsm::advertises(uint16_t function_id) const {
    return std::any_of(functions_.begin(), functions_.end(),
                       [&](const RanFunction& f) { return f.function_id == function_id; });
}

void E2ConnectionFsm::end_all(Output& out) {
    for (auto& [id, sub] : subs_) {
        if (sub.status == SubscriptionStatus::Deleted) continue;
        if (sub.status == SubscriptionStatus::Pending) {
            out.to_local.push_back(rejection(id, ReasonCode::NotEstablished));
        }
        sub.status = SubscriptionStatus::Deleted;
        out.to_local.push_back(SubscriptionDelete{id});
    }
}

E2ConnectionFsm::Output E2ConnectionFsm::violation(const std::string& detail) {
    Output out;
    spdlog::warn("e2 connection closed on protocol violation: {}", detail);
    out.to_peer.push_back(ErrorIndication{static_cast<uint8_t>(ErrorCode::ProtocolViolation), detail});
    end_all(out);
    state_ = State::Closed;
    out.close = true;
    return out;
}

E2ConnectionFsm::Output E2ConnectionFsm::shutdown() {
    Output out;
    end_all(out);
    state_ = State::Closed;
    out.close = true;
    return out;
}

E2ConnectionFsm::Output E2ConnectionFsm::on_inbound(const E2Message& msg) {
    if (state_ == State::Closed) return {};

    if (const auto* err = std::get_if<ErrorIndication>(&msg)) {
        spdlog::warn("e2 node {} reported error {}: {}", node_id_, err->code, err->detail);
        return shutdown();
    }

    if (state_ == State::AwaitSetup) {
        const auto* setup = std::get_if<SetupRequest>(&msg);
        if (setup == nullptr) {
            return violation(std::string(to_string(type_of(msg))) + " before SetupRequest");
        }
        node_id_ = setup->node_id;
        functions_ = setup->functions;
        SetupResponse resp;
        for (const auto& f : functions_) {
            if (std::find(resp.accepted_function_ids.begin(), resp.accepted_function_ids.end(),
                          f.function_id) == resp.accepted_function_ids.end()) {
                resp.accepted_function_ids.push_back(f.function_id);
            }
        }
        state_ = State::Established;
        Output out;
        out.to_peer.push_back(std::move(resp));
        return out;
    }

    Output out;
    if (const auto* resp = std::get_if<SubscriptionResponse>(&msg)) {
        auto it = subs_.find(resp->sub_id);
        if (it == subs_.end() || it->second.status != SubscriptionStatus::Pending) {
            return violation("SubscriptionResponse for unknown or settled sub_id " +
                             std::to_string(resp->sub_id));
        }
        it->second.status = resp->accepted ? SubscriptionStatus::Active : SubscriptionStatus::Deleted;
        out.to_local.push_back(*resp);
        return out;
    }
    if (const auto* ind = std::get_if<Indication>(&msg)) {
        auto it = subs_.find(ind->sub_id);
        if (it == subs_.end() || it->second.status == SubscriptionStatus::Pending) {
            return violation("Indication for inactive sub_id " + std::to_string(ind->sub_id));
        }
        auto& sub = it->second;
        if (sub.status == SubscriptionStatus::Deleted) return out;  // raced with our delete
        if (ind->seq <= sub.last_seq) {
            return violation("Indication seq " + std::to_string(ind->seq) + " not above " +
                             std::to_string(sub.last_seq));
        }
        if (ind->seq != sub.last_seq + 1) {
            spdlog::warn("sub {}: indication seq jumped {} -> {}", sub.sub_id, sub.last_seq, ind->seq);
        }
        sub.last_seq = ind->seq;
        out.to_local.push_back(*ind);
        return out;
    }
    if (const auto* del = std::get_if<SubscriptionDelete>(&msg)) {
        auto it = subs_.find(del->sub_id);
        if (it != subs_.end() && it->second.status != SubscriptionStatus::Deleted) {
            if (it->second.status == SubscriptionStatus::Pending) {
                out.to_local.push_back(rejection(del->sub_id, ReasonCode::NotEstablished));
            }
            it->second.status = SubscriptionStatus::Deleted;
            out.to_local.push_back(*del);
        }
        return out;
    }
    return violation(std::string("unexpected ") + to_string(type_of(msg)) + " from E2 node");
}

E2ConnectionFsm::Output E2ConnectionFsm::subscribe(uint32_t sub_id, uint32_t owner,
                                                   uint16_t function_id, uint32_t period_ms) {
    if (state_ != State::Established) {
        Output out = state_ == State::Closed ? Output{} : violation("subscription before E2 setup");
        out.to_local.insert(out.to_local.begin(), rejection(sub_id, ReasonCode::NotEstablished));
        out.close = true;
        return out;
    }
    Output out;
    if (subs_.contains(sub_id)) {
        out.to_local.push_back(rejection(sub_id, ReasonCode::DuplicateSubId));
        return out;
    }
    if (!advertises(function_id)) {
        out.to_local.push_back(rejection(sub_id, ReasonCode::UnknownFunction));
        return out;
    }
    subs_.emplace(sub_id, SubscriptionState{sub_id, owner, function_id, period_ms,
                                            SubscriptionStatus::Pending, 0});
    out.to_peer.push_back(SubscriptionRequest{sub_id, function_id, period_ms});
    return out;
}

E2ConnectionFsm::Output E2ConnectionFsm::unsubscribe(uint32_t sub_id) {
    Output out;
    auto it = subs_.find(sub_id);
    if (state_ != State::Established || it == subs_.end() ||
        it->second.status == SubscriptionStatus::Deleted) {
        return out;
    }
    if (it->second.status == SubscriptionStatus::Pending) {
        out.to_local.push_back(rejection(sub_id, ReasonCode::NotEstablished));
    }
    it->second.status = SubscriptionStatus::Deleted;
    out.to_peer.push_back(SubscriptionDelete{sub_id});
    out.to_local.push_back(SubscriptionDelete{sub_id});
    return out;
}

// ---------------------------------------------------------------------------
// NearRtRic

NearRtRic::NearRtRic(MetricStore& store, size_t delivery_capacity)
    : store_(store), delivery_capacity_(delivery_capacity) {}

NearRtRic::~NearRtRic() { shutdown(); }

void NearRtRic::attach(std::unique_ptr<transport::ByteStream> stream) {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    auto conn = std::make_unique<Connection>();
    conn->stream = std::move(stream);
    Connection* raw = conn.get();
    connections_.push_back(std::move(conn));
    raw->thread = std::thread([this, raw] { serve(*raw); });
}

void NearRtRic::listen(transport::TcpListener& listener) {
    {
        std::lock_guard lock(mu_);
        listener_ = &listener;
    }
    accept_thread_ = std::thread([this, &listener] {
        while (auto stream = listener.accept()) attach(std::move(stream));
    });
}

bool NearRtRic::wait_for_nodes(size_t count, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] {
        size_t established = 0;
        for (const auto& c : connections_) {
            if (c->fsm.state() == E2ConnectionFsm::State::Established) ++established;
        }
        return established >= count;
    });
}

void NearRtRic::send(Connection& conn, const std::vector<E2Message>& msgs) {
    std::lock_guard lock(conn.write_mu);
    for (const auto& m : msgs) {
        try {
            transport::send_message(*conn.stream, m);
        } catch (const transport::TransportError& e) {
            spdlog::debug("ric send failed: {}", e.what());
            return;
        }
    }
}

void NearRtRic::handle_local(const std::vector<E2Message>& events) {
    for (const auto& ev : events) {
        if (const auto* resp = std::get_if<SubscriptionResponse>(&ev)) {
            std::shared_ptr<BlockingQueue<Indication>> queue;
            {
                std::lock_guard lock(mu_);
                auto it = deliveries_.find(resp->sub_id);
                if (it == deliveries_.end()) continue;
                if (!it->second.answered) {
                    it->second.answered = true;
                    it->second.answer.set_value({resp->sub_id, resp->accepted, resp->reason_code});
                }
                if (!resp->accepted) queue = it->second.queue;
            }
            if (queue) queue->close();
        } else if (const auto* ind = std::get_if<Indication>(&ev)) {
            std::shared_ptr<BlockingQueue<Indication>> queue;
            {
                std::lock_guard lock(mu_);
                ++stats_.indications_received;
                if (auto it = deliveries_.find(ind->sub_id); it != deliveries_.end()) {
                    queue = it->second.queue;
                }
            }
            store_.append(ind->sub_id, ind->records);
            {
                std::lock_guard lock(mu_);
                ++stats_.indications_stored;
                stats_.records_stored += ind->records.size();
            }
            if (queue && queue->push(*ind)) {
                std::lock_guard lock(mu_);
                ++stats_.indications_delivered;
            }
        } else if (const auto* del = std::get_if<SubscriptionDelete>(&ev)) {
            std::shared_ptr<BlockingQueue<Indication>> queue;
            {
                std::lock_guard lock(mu_);
                if (auto it = deliveries_.find(del->sub_id); it != deliveries_.end()) {
                    queue = it->second.queue;
                }
            }
            if (queue) queue->close();
        }
    }
}

void NearRtRic::serve(Connection& conn) {
    try {
        while (true) {
            std::optional<E2Message> msg;
            try {
                msg = transport::recv_message(*conn.stream);
            } catch (const DecodeError& e) {
                protocol_error_ = true;
                send(conn, {ErrorIndication{static_cast<uint8_t>(ErrorCode::DecodeFailure), e.what()}});
                break;
            }
            if (!msg) break;
            E2ConnectionFsm::Output out;
            {
                std::lock_guard lock(mu_);
                out = conn.fsm.on_inbound(*msg);
                if (out.close && !out.to_peer.empty()) protocol_error_ = true;
            }
            cv_.notify_all();
            send(conn, out.to_peer);
            handle_local(out.to_local);
            if (out.close) break;
        }
    } catch (const std::exception& e) {
        spdlog::warn("e2 connection ended: {}", e.what());
    }
    conn.stream->close();
    E2ConnectionFsm::Output out;
    {
        std::lock_guard lock(mu_);
        out = conn.fsm.shutdown();
    }
    handle_local(out.to_local);
    {
        std::lock_guard lock(mu_);
        conn.done = true;
    }
    cv_.notify_all();
}

uint32_t NearRtRic::register_xapp(const std::string& name) {
    std::lock_guard lock(mu_);
    const uint32_t id = next_xapp_id_++;
    xapps_.emplace(id, name);
    return id;
}

SubscribeResult NearRtRic::xapp_subscribe(uint32_t xapp_id, uint16_t function_id,
                                          uint32_t period_ms, std::chrono::milliseconds timeout) {
    Connection* target = nullptr;
    uint32_t sub_id = 0;
    std::future<SubscribeResult> answer;
    E2ConnectionFsm::Output out;
    {
        std::lock_guard lock(mu_);
        if (!xapps_.contains(xapp_id)) {
            throw std::invalid_argument("unknown xApp id " + std::to_string(xapp_id));
        }
        for (auto& c : connections_) {
            if (c->fsm.state() == E2ConnectionFsm::State::Established && c->fsm.advertises(function_id)) {
                target = c.get();
                break;
            }
        }
        sub_id = next_sub_id_++;
        if (target == nullptr) {
            return {sub_id, false, static_cast<uint8_t>(ReasonCode::NoNode)};
        }
        Delivery d;
        d.owner = xapp_id;
        d.queue = std::make_shared<BlockingQueue<Indication>>(delivery_capacity_);
        answer = d.answer.get_future();
        deliveries_.emplace(sub_id, std::move(d));
        sub_owner_conn_[sub_id] = target;
        out = target->fsm.subscribe(sub_id, xapp_id, function_id, period_ms);
    }
    send(*target, out.to_peer);
    handle_local(out.to_local);
    if (answer.wait_for(timeout) != std::future_status::ready) {
        return {sub_id, false, static_cast<uint8_t>(ReasonCode::NotEstablished)};
    }
    return answer.get();
}

void NearRtRic::xapp_unsubscribe(uint32_t sub_id) {
    Connection* conn = nullptr;
    E2ConnectionFsm::Output out;
    {
        std::lock_guard lock(mu_);
        auto it = sub_owner_conn_.find(sub_id);
        if (it == sub_owner_conn_.end()) return;
        conn = it->second;
        out = conn->fsm.unsubscribe(sub_id);
    }
    send(*conn, out.to_peer);
    handle_local(out.to_local);
}

std::optional<Indication> NearRtRic::next_indication(uint32_t sub_id) {
    std::shared_ptr<BlockingQueue<Indication>> queue;
    {
        std::lock_guard lock(mu_);
        auto it = deliveries_.find(sub_id);
        if (it == deliveries_.end()) return std::nullopt;
        queue = it->second.queue;
    }
    return queue->pop();
}

void NearRtRic::wait_idle() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] {
        return std::all_of(connections_.begin(), connections_.end(),
                           [](const auto& c) { return c->done; });
    });
}

void NearRtRic::shutdown() {
    std::vector<Connection*> conns;
    {
        std::lock_guard lock(mu_);
        if (stopping_ && connections_.empty() && !accept_thread_.joinable()) return;
        stopping_ = true;
        if (listener_) listener_->close();
        for (auto& c : connections_) conns.push_back(c.get());
        for (auto& [id, d] : deliveries_) d.queue->close();
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        std::lock_guard lock(mu_);
        conns.clear();
        for (auto& c : connections_) conns.push_back(c.get());
    }
    for (auto* c : conns) c->stream->close();
    for (auto* c : conns) {
        if (c->thread.joinable()) c->thread.join();
    }
}

RicStats NearRtRic::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

}  // namespace aerial_twin::ric
