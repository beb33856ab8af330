#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "aerial_twin/kpm.hpp"

namespace aerial_twin::e2 {

/*
 * Frame layout (all integers big-endian):
 *   [u32 payload length][u8 type][body]
 * The length counts the type byte and the body. Strings are u16 length + bytes,
 * lists are u16 count + elements. Type tags 0x08 and above are reserved.
 *
 *   0x01 SetupRequest         u32 node_id, list{u16 function_id, string name}
 *   0x02 SetupResponse        list{u16 function_id}
 *   0x03 SubscriptionRequest  u32 sub_id, u16 function_id, u32 report_period_ms
 *   0x04 SubscriptionResponse u32 sub_id, u8 accepted (0|1), u8 reason_code
 *   0x05 Indication           u32 sub_id, u64 seq, list{KpmRecord}
 *   0x06 SubscriptionDelete   u32 sub_id
 *   0x07 ErrorIndication      u8 code, string detail
 *
 * KpmRecord (38 bytes): u64 t_ms, u32 ue_id, u32 dl_thp_kbps, u32 rb_count,
 *   u32 sdu_latency_us (0xFFFFFFFF = absent), i32 x/y/z cm, u8 cqi, u8 mcs.
 */

inline constexpr size_t kHeaderSize = 4;
inline constexpr size_t kKpmRecordSize = 38;
inline constexpr uint32_t kLatencyAbsent = 0xFFFFFFFFu;
/// Upper bound on the payload length accepted from the wire.
inline constexpr uint32_t kMaxPayload = 16u * 1024u * 1024u;

enum class MessageType : uint8_t {
    SetupRequest = 0x01,
    SetupResponse = 0x02,
    SubscriptionRequest = 0x03,
    SubscriptionResponse = 0x04,
    Indication = 0x05,
    SubscriptionDelete = 0x06,
    ErrorIndication = 0x07,
};

enum class ReasonCode : uint8_t {
    Ok = 0,
    UnknownFunction = 1,
    InvalidPeriod = 2,
    DuplicateSubId = 3,
    NoNode = 4,
    NotEstablished = 5,
};

enum class ErrorCode : uint8_t {
    ProtocolViolation = 1,
    DecodeFailure = 2,
    SequenceGap = 3,
};

struct RanFunction {
    uint16_t function_id = 0;
    std::string name;
    bool operator==(const RanFunction&) const = default;
};

struct SetupRequest {
    uint32_t node_id = 0;
    std::vector<RanFunction> functions;
    bool operator==(const SetupRequest&) const = default;
};

struct SetupResponse {
    std::vector<uint16_t> accepted_function_ids;
    bool operator==(const SetupResponse&) const = default;
};

struct SubscriptionRequest {
    uint32_t sub_id = 0;
    uint16_t function_id = 0;
    uint32_t report_period_ms = 0;
    bool operator==(const SubscriptionRequest&) const = default;
};

struct SubscriptionResponse {
    uint32_t sub_id = 0;
    bool accepted = false;
    uint8_t reason_code = 0;
    bool operator==(const SubscriptionResponse&) const = default;
};

struct Indication {
    uint32_t sub_id = 0;
    uint64_t seq = 0;
    std::vector<KpmRecord> records;
    bool operator==(const Indication&) const = default;
};

struct SubscriptionDelete {
    uint32_t sub_id = 0;
    bool operator==(const SubscriptionDelete&) const = default;
};

struct ErrorIndication {
    uint8_t code = 0;
    std::string detail;
    bool operator==(const ErrorIndication&) const = default;
};

/// Alternative order matches the type tags (index + 1).
using E2Message = std::variant<SetupRequest, SetupResponse, SubscriptionRequest, SubscriptionResponse,
                               Indication, SubscriptionDelete, ErrorIndication>;

enum class DecodeErrorKind {
    UnknownType,
    TruncatedPayload,
    LengthMismatch,
    InvalidValue,
};

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    DecodeErrorKind kind() const { return kind_; }

private:
    DecodeErrorKind kind_;
};

/// Throws std::length_error if a string or list exceeds its u16 prefix, or a
/// present latency collides with the absent sentinel.
std::vector<uint8_t> encode(const E2Message& msg);

/// Decodes exactly one frame (header included). Trailing bytes are a LengthMismatch.
E2Message decode(std::span<const uint8_t> frame);

/// Decodes a payload (type byte + body) whose length header was already consumed.
E2Message decode_payload(std::span<const uint8_t> payload);

MessageType type_of(const E2Message& msg);
const char* to_string(MessageType type);
const char* to_string(DecodeErrorKind kind);

}  // namespace aerial_twin::e2
