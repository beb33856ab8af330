#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "aerial_twin/e2_codec.hpp"

namespace aerial_twin::transport {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reliable, ordered, bidirectional byte stream.
class ByteStream {
public:
    virtual ~ByteStream() = default;

    /// Blocks until every byte is accepted. Throws TransportError if the stream is closed.
    virtual void write_all(std::span<const uint8_t> bytes) = 0;

    /// Fills `out` completely. Returns false on end-of-stream before the first
    /// byte; throws TransportError if the stream ends part way.
    virtual bool read_exact(std::span<uint8_t> out) = 0;

    /// Closes both directions and wakes any blocked reader on either end.
    virtual void close() = 0;
};

/// Two connected in-process endpoints. Each direction buffers at most
/// `capacity_bytes`; writers block when it is full.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_inproc_pair(
    size_t capacity_bytes = 1 << 20);

class TcpListener {
public:
    /// `address` is "host:port"; port 0 picks an ephemeral port.
    explicit TcpListener(const std::string& address);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    uint16_t port() const { return port_; }
    std::string host() const { return host_; }

    /// Blocks for the next connection; returns nullptr once the listener is closed.
    std::unique_ptr<ByteStream> accept();
    void close();

private:
    int fd_ = -1;
    std::string host_;
    uint16_t port_ = 0;
};

std::unique_ptr<ByteStream> tcp_connect(const std::string& address);

/// Writes one encoded frame.
void send_message(ByteStream& stream, const e2::E2Message& msg);

/// Reads one frame. Returns nullopt on a clean end-of-stream between frames.
/// Throws e2::DecodeError for malformed frames and TransportError for I/O failures.
std::optional<e2::E2Message> recv_message(ByteStream& stream);

}  // namespace aerial_twin::transport
