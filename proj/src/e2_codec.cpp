#include "aerial_twin/e2_codec.hpp"

#include <limits>
#include <type_traits>

namespace aerial_twin::e2 {

namespace {

class Writer {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { be(v, 2); }
    void u32(uint32_t v) { be(v, 4); }
    void u64(uint64_t v) { be(v, 8); }
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }

    void str(const std::string& s) {
        u16(count(s.size(), "string"));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    static uint16_t count(size_t n, const char* what) {
        if (n > std::numeric_limits<uint16_t>::max()) {
            throw std::length_error(std::string("e2 encode: ") + what + " exceeds 65535 elements");
        }
        return static_cast<uint16_t>(n);
    }

    std::vector<uint8_t>& bytes() { return buf_; }

private:
    void be(uint64_t v, int width) {
        for (int i = width - 1; i >= 0; --i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    std::vector<uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return static_cast<uint8_t>(be(1)); }
    uint16_t u16() { return static_cast<uint16_t>(be(2)); }
    uint32_t u32() { return static_cast<uint32_t>(be(4)); }
    uint64_t u64() { return be(8); }
    int32_t i32() { return static_cast<int32_t>(u32()); }

    std::string str() {
        const uint16_t len = u16();
        need(len);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    bool boolean() {
        const uint8_t v = u8();
        if (v > 1) throw DecodeError(DecodeErrorKind::InvalidValue, "boolean field is neither 0 nor 1");
        return v == 1;
    }

    size_t remaining() const { return data_.size() - pos_; }

private:
    void need(size_t n) const {
        if (n > remaining()) {
            throw DecodeError(DecodeErrorKind::TruncatedPayload, "payload ends inside a field");
        }
    }

    uint64_t be(size_t width) {
        need(width);
        uint64_t v = 0;
        for (size_t i = 0; i < width; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += width;
        return v;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

void write_record(Writer& w, const KpmRecord& r) {
    w.u64(r.t_ms);
    w.u32(r.ue_id);
    w.u32(r.dl_thp_kbps);
    w.u32(r.rb_count);
    if (r.sdu_latency_us && *r.sdu_latency_us == kLatencyAbsent) {
        throw std::length_error("e2 encode: sdu_latency_us collides with the absent sentinel");
    }
    w.u32(r.sdu_latency_us.value_or(kLatencyAbsent));
    w.i32(r.pos_x_cm);
    w.i32(r.pos_y_cm);
    w.i32(r.pos_z_cm);
    w.u8(r.cqi);
    w.u8(r.mcs);
}

KpmRecord read_record(Reader& r) {
    KpmRecord rec;
    rec.t_ms = r.u64();
    rec.ue_id = r.u32();
    rec.dl_thp_kbps = r.u32();
    rec.rb_count = r.u32();
    const uint32_t lat = r.u32();
    if (lat != kLatencyAbsent) rec.sdu_latency_us = lat;
    rec.pos_x_cm = r.i32();
    rec.pos_y_cm = r.i32();
    rec.pos_z_cm = r.i32();
    rec.cqi = r.u8();
    rec.mcs = r.u8();
    return rec;
}

void write_body(Writer& w, const SetupRequest& m) {
    w.u32(m.node_id);
    w.u16(Writer::count(m.functions.size(), "function list"));
    for (const auto& f : m.functions) {
        w.u16(f.function_id);
        w.str(f.name);
    }
}

void write_body(Writer& w, const SetupResponse& m) {
    w.u16(Writer::count(m.accepted_function_ids.size(), "function id list"));
    for (uint16_t id : m.accepted_function_ids) w.u16(id);
}

void write_body(Writer& w, const SubscriptionRequest& m) {
    w.u32(m.sub_id);
    w.u16(m.function_id);
    w.u32(m.report_period_ms);
}

void write_body(Writer& w, const SubscriptionResponse& m) {
    w.u32(m.sub_id);
    w.u8(m.accepted ? 1 : 0);
    w.u8(m.reason_code);
}

void write_body(Writer& w, const Indication& m) {
    w.u32(m.sub_id);
    w.u64(m.seq);
    w.u16(Writer::count(m.records.size(), "record list"));
    for (const auto& r : m.records) write_record(w, r);
}

void write_body(Writer& w, const SubscriptionDelete& m) { w.u32(m.sub_id); }

void write_body(Writer& w, const ErrorIndication& m) {
    w.u8(m.code);
    w.str(m.detail);
}

E2Message read_body(MessageType type, Reader& r) {
    switch (type) {
        case MessageType::SetupRequest: {
            SetupRequest m;
            m.node_id = r.u32();
            const uint16_t n = r.u16();
            for (uint16_t i = 0; i < n; ++i) {
                RanFunction f;
                f.function_id = r.u16();
                f.name = r.str();
                m.functions.push_back(std::move(f));
            }
            return m;
        }
        case MessageType::SetupResponse: {
            SetupResponse m;
            const uint16_t n = r.u16();
            for (uint16_t i = 0; i < n; ++i) m.accepted_function_ids.push_back(r.u16());
            return m;
        }
        case MessageType::SubscriptionRequest: {
            SubscriptionRequest m;
            m.sub_id = r.u32();
            m.function_id = r.u16();
            m.report_period_ms = r.u32();
            return m;
        }
        case MessageType::SubscriptionResponse: {
            SubscriptionResponse m;
            m.sub_id = r.u32();
            m.accepted = r.boolean();
            m.reason_code = r.u8();
            return m;
        }
        case MessageType::Indication: {
            Indication m;
            m.sub_id = r.u32();
            m.seq = r.u64();
            const uint16_t n = r.u16();
            if (static_cast<size_t>(n) * kKpmRecordSize > r.remaining()) {
                throw DecodeError(DecodeErrorKind::TruncatedPayload, "record list exceeds payload");
            }
            m.records.reserve(n);
            for (uint16_t i = 0; i < n; ++i) m.records.push_back(read_record(r));
            return m;
        }
        case MessageType::SubscriptionDelete: {
            SubscriptionDelete m;
            m.sub_id = r.u32();
            return m;
        }
        case MessageType::ErrorIndication: {
            ErrorIndication m;
            m.code = r.u8();
            m.detail = r.str();
            return m;
        }
    }
    throw DecodeError(DecodeErrorKind::UnknownType, "unknown message type");
}

}  // namespace

MessageType type_of(const E2Message& msg) { return static_cast<MessageType>(msg.index() + 1); }

std::vector<uint8_t> encode(const E2Message& msg) {
    Writer w;
    w.u32(0);  // patched below
    w.u8(static_cast<uint8_t>(type_of(msg)));
    std::visit([&w](const auto& m) { write_body(w, m); }, msg);
    auto& buf = w.bytes();
    const auto len = static_cast<uint32_t>(buf.size() - kHeaderSize);
    for (int i = 0; i < 4; ++i) buf[static_cast<size_t>(i)] = static_cast<uint8_t>(len >> (8 * (3 - i)));
    return std::move(buf);
}

E2Message decode_payload(std::span<const uint8_t> payload) {
    if (payload.empty()) {
        throw DecodeError(DecodeErrorKind::TruncatedPayload, "payload has no type byte");
    }
    const uint8_t tag = payload[0];
    if (tag < 0x01 || tag > 0x07) {
        throw DecodeError(DecodeErrorKind::UnknownType, "unknown message type tag " + std::to_string(tag));
    }
    Reader r(payload.subspan(1));
    E2Message msg = read_body(static_cast<MessageType>(tag), r);
    if (r.remaining() != 0) {
        throw DecodeError(DecodeErrorKind::LengthMismatch,
                          std::to_string(r.remaining()) + " unread bytes after message body");
    }
    return msg;
}

E2Message decode(std::span<const uint8_t> frame) {
    if (frame.size() < kHeaderSize) {
        throw DecodeError(DecodeErrorKind::TruncatedPayload, "frame shorter than length header");
    }
    const uint32_t len = (uint32_t{frame[0]} << 24) | (uint32_t{frame[1]} << 16) |
                         (uint32_t{frame[2]} << 8) | uint32_t{frame[3]};
    const size_t available = frame.size() - kHeaderSize;
    if (len > available) {
        throw DecodeError(DecodeErrorKind::TruncatedPayload,
                          "frame declares " + std::to_string(len) + " payload bytes, has " +
                              std::to_string(available));
    }
    if (len < available) {
        throw DecodeError(DecodeErrorKind::LengthMismatch,
                          "frame declares " + std::to_string(len) + " payload bytes, carries " +
                              std::to_string(available));
    }
    return decode_payload(frame.subspan(kHeaderSize));
}

const char* to_string(MessageType type) {
    switch (type) {
        case MessageType::SetupRequest: return "SetupRequest";
        case MessageType::SetupResponse: return "SetupResponse";
        case MessageType::SubscriptionRequest: return "SubscriptionRequest";
        case MessageType::SubscriptionResponse: return "SubscriptionResponse";
        case MessageType::Indication: return "Indication";
        case MessageType::SubscriptionDelete: return "SubscriptionDelete";
        case MessageType::ErrorIndication: return "ErrorIndication";
    }
    return "Unknown";
}

const char* to_string(DecodeErrorKind kind) {
    switch (kind) {
        case DecodeErrorKind::UnknownType: return "unknown-type";
        case DecodeErrorKind::TruncatedPayload: return "truncated-payload";
        case DecodeErrorKind::LengthMismatch: return "length-mismatch";
        case DecodeErrorKind::InvalidValue: return "invalid-value";
    }
    return "unknown";
}

}  // namespace aerial_twin::e2
