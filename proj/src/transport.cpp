#include "aerial_twin/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <vector>

namespace aerial_twin::transport {

namespace {

struct Channel {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<uint8_t> buf;
    size_t capacity = 0;
    bool closed = false;
};

class InprocStream final : public ByteStream {
public:
    InprocStream(std::shared_ptr<Channel> rx, std::shared_ptr<Channel> tx)
        : rx_(std::move(rx)), tx_(std::move(tx)) {}

    ~InprocStream() override { close(); }

    void write_all(std::span<const uint8_t> bytes) override {
        std::unique_lock lock(tx_->mu);
        size_t off = 0;
        while (off < bytes.size()) {
            tx_->cv.wait(lock, [&] { return tx_->closed || tx_->buf.size() < tx_->capacity; });
            if (tx_->closed) throw TransportError("inproc stream closed");
            const size_t n = std::min(bytes.size() - off, tx_->capacity - tx_->buf.size());
            tx_->buf.insert(tx_->buf.end(), bytes.begin() + static_cast<std::ptrdiff_t>(off),
                            bytes.begin() + static_cast<std::ptrdiff_t>(off + n));
            off += n;
            tx_->cv.notify_all();
        }
    }

    bool read_exact(std::span<uint8_t> out) override {
        std::unique_lock lock(rx_->mu);
        size_t off = 0;
        while (off < out.size()) {
            rx_->cv.wait(lock, [&] { return rx_->closed || !rx_->buf.empty(); });
            if (rx_->buf.empty()) {
                if (off == 0) return false;
                throw TransportError("inproc stream closed mid-frame");
            }
            const size_t n = std::min(out.size() - off, rx_->buf.size());
            std::copy_n(rx_->buf.begin(), n, out.begin() + static_cast<std::ptrdiff_t>(off));
            rx_->buf.erase(rx_->buf.begin(), rx_->buf.begin() + static_cast<std::ptrdiff_t>(n));
            off += n;
            rx_->cv.notify_all();
        }
        return true;
    }

    void close() override {
        for (auto* ch : {rx_.get(), tx_.get()}) {
            std::lock_guard lock(ch->mu);
            ch->closed = true;
            ch->cv.notify_all();
        }
    }

private:
    std::shared_ptr<Channel> rx_;
    std::shared_ptr<Channel> tx_;
};

class TcpStream final : public ByteStream {
public:
    explicit TcpStream(int fd) : fd_(fd) {
        int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }

    ~TcpStream() override {
        close();
        ::close(fd_);
    }

    void write_all(std::span<const uint8_t> bytes) override {
        size_t off = 0;
        while (off < bytes.size()) {
            const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("tcp send: ") + std::strerror(errno));
            }
            off += static_cast<size_t>(n);
        }
    }

    bool read_exact(std::span<uint8_t> out) override {
        size_t off = 0;
        while (off < out.size()) {
            const ssize_t n = ::recv(fd_, out.data() + off, out.size() - off, 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("tcp recv: ") + std::strerror(errno));
            }
            if (n == 0) {
                if (off == 0) return false;
                throw TransportError("tcp stream closed mid-frame");
            }
            off += static_cast<size_t>(n);
        }
        return true;
    }

    void close() override { ::shutdown(fd_, SHUT_RDWR); }

private:
    int fd_;
};

std::pair<std::string, std::string> split_address(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) {
        throw TransportError("socket address '" + address + "' is not host:port");
    }
    return {address.substr(0, colon), address.substr(colon + 1)};
}

sockaddr_in resolve(const std::string& address) {
    const auto [host, port] = split_address(address);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0 || res == nullptr) {
        throw TransportError("cannot resolve '" + address + "': " + ::gai_strerror(rc));
    }
    sockaddr_in sa{};
    std::memcpy(&sa, res->ai_addr, sizeof(sa));
    ::freeaddrinfo(res);
    return sa;
}

}  // namespace

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_inproc_pair(
    size_t capacity_bytes) {
    auto a_to_b = std::make_shared<Channel>();
    auto b_to_a = std::make_shared<Channel>();
    a_to_b->capacity = std::max<size_t>(capacity_bytes, 1);
    b_to_a->capacity = std::max<size_t>(capacity_bytes, 1);
    return {std::make_unique<InprocStream>(b_to_a, a_to_b),
            std::make_unique<InprocStream>(a_to_b, b_to_a)};
}

TcpListener::TcpListener(const std::string& address) {
    sockaddr_in sa = resolve(address);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0 || ::listen(fd_, 16) != 0) {
        const std::string err = std::strerror(errno);
        ::close(fd_);
        throw TransportError("cannot listen on '" + address + "': " + err);
    }
    socklen_t len = sizeof(sa);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
    char buf[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof(buf));
    host_ = buf;
}

TcpListener::~TcpListener() {
    close();
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<ByteStream> TcpListener::accept() {
    while (true) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0) return std::make_unique<TcpStream>(fd);
        if (errno == EINTR) continue;
        return nullptr;
    }
}

void TcpListener::close() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

std::unique_ptr<ByteStream> tcp_connect(const std::string& address) {
    sockaddr_in sa = resolve(address);
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw TransportError("cannot connect to '" + address + "': " + err);
    }
    return std::make_unique<TcpStream>(fd);
}

void send_message(ByteStream& stream, const e2::E2Message& msg) {
    const auto frame = e2::encode(msg);
    stream.write_all(frame);
}

std::optional<e2::E2Message> recv_message(ByteStream& stream) {
    uint8_t header[e2::kHeaderSize];
    if (!stream.read_exact(header)) return std::nullopt;
    const uint32_t len = (uint32_t{header[0]} << 24) | (uint32_t{header[1]} << 16) |
                         (uint32_t{header[2]} << 8) | uint32_t{header[3]};
    if (len == 0 || len > e2::kMaxPayload) {
        throw e2::DecodeError(e2::DecodeErrorKind::LengthMismatch,
                              "frame length " + std::to_string(len) + " out of range");
    }
    std::vector<uint8_t> payload(len);
    if (!stream.read_exact(payload)) throw TransportError("stream closed after frame header");
    return e2::decode_payload(payload);
}

}  // namespace aerial_twin::transport
