#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/select.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "homecrawl/discovery.hpp"
#include "homecrawl/gateway.hpp"

namespace homecrawl::net {

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

struct Endpoint {
    std::string host;
    uint16_t port = 0;
};

inline Endpoint split_endpoint(const std::string& ep) {
    size_t colon = ep.rfind(':');
    if (colon == std::string::npos) throw NetError("endpoint needs host:port, got " + ep);
    Endpoint out;
    out.host = ep.substr(0, colon);
    out.port = static_cast<uint16_t>(std::stoi(ep.substr(colon + 1)));
    return out;
}

inline sockaddr_in make_addr(const std::string& host, uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw NetError("bad IPv4 address: " + host);
    return addr;
}

}  // namespace detail

// System clock with a fixed UTC offset; used only by the CLI, never by
// library code.
class SystemClock : public discovery::Clock {
public:
    explicit SystemClock(int tzOffsetMin = 0) : tzOffsetMin_(tzOffsetMin) {}
    double now_seconds() const override {
        timespec ts{};
        clock_gettime(CLOCK_REALTIME, &ts);
        return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
    }
    std::string now_rfc3339() const override {
        return rfc3339_format(static_cast<int64_t>(now_seconds()), tzOffsetMin_);
    }

private:
    int tzOffsetMin_;
};

// UDP transport bound to an ephemeral port; sends to whatever endpoint the
// scan requests (multicast groups included) and receives unicast replies.
class UdpTransport : public discovery::Transport {
public:
    UdpTransport() {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0) throw NetError(std::string("socket: ") + std::strerror(errno));
        int ttl = 2;
        ::setsockopt(fd_, IPPROTO_IP, IP_MULTICAST_TTL, &ttl, sizeof ttl);
    }
    ~UdpTransport() override {
        if (fd_ >= 0) ::close(fd_);
    }
    UdpTransport(const UdpTransport&) = delete;
    UdpTransport& operator=(const UdpTransport&) = delete;

    void send(const std::string& endpoint, const std::vector<uint8_t>& bytes) override {
        auto ep = detail::split_endpoint(endpoint);
        sockaddr_in addr = detail::make_addr(ep.host, ep.port);
        if (::sendto(fd_, bytes.data(), bytes.size(), 0,
                     reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
            throw NetError(std::string("sendto ") + endpoint + ": " + std::strerror(errno));
    }

    std::optional<discovery::Datagram> receive(double timeoutSec) override {
        fd_set fds;
        FD_ZERO(&fds);
        FD_SET(fd_, &fds);
        timeval tv{};
        tv.tv_sec = static_cast<time_t>(timeoutSec);
        tv.tv_usec = static_cast<suseconds_t>((timeoutSec - static_cast<double>(tv.tv_sec)) * 1e6);
        int rc = ::select(fd_ + 1, &fds, nullptr, nullptr, &tv);
        if (rc <= 0) return std::nullopt;
        std::vector<uint8_t> buf(65536);
        sockaddr_in from{};
        socklen_t fromLen = sizeof from;
        ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0,
                               reinterpret_cast<sockaddr*>(&from), &fromLen);
        if (n < 0) return std::nullopt;
        buf.resize(static_cast<size_t>(n));
        char host[INET_ADDRSTRLEN] = {0};
        inet_ntop(AF_INET, &from.sin_addr, host, sizeof host);
        return discovery::Datagram{std::string(host) + ":" + std::to_string(ntohs(from.sin_port)),
                                   std::move(buf)};
    }

private:
    int fd_ = -1;
};

// Newline-delimited TCP client connection to a gateway.
class TcpConnection : public gateway::Connection {
public:
    explicit TcpConnection(const std::string& endpoint) {
        auto ep = detail::split_endpoint(endpoint);
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw NetError(std::string("socket: ") + std::strerror(errno));
        sockaddr_in addr = detail::make_addr(ep.host, ep.port);
        if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            ::close(fd_);
            fd_ = -1;
            throw NetError("connect " + endpoint + ": " + std::strerror(errno));
        }
    }
    ~TcpConnection() override {
        if (fd_ >= 0) ::close(fd_);
    }
    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    void send_line(const std::string& line) override {
        std::string out = line + "\n";
        size_t off = 0;
        while (off < out.size()) {
            ssize_t n = ::send(fd_, out.data() + off, out.size() - off, 0);
            if (n <= 0) throw gateway::ConnectionClosed("send failed");
            off += static_cast<size_t>(n);
        }
    }

    std::string recv_line() override {
        while (true) {
            size_t nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            char chunk[4096];
            ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0) throw gateway::ConnectionClosed("peer closed connection");
            buffer_.append(chunk, static_cast<size_t>(n));
        }
    }

private:
    int fd_ = -1;
    std::string buffer_;
};

// Line-oriented TCP server; one handler call per request line, one client at
// a time. serve_forever only returns on accept failure.
class TcpLineServer {
public:
    TcpLineServer(const std::string& host, uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw NetError(std::string("socket: ") + std::strerror(errno));
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr = detail::make_addr(host, port);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            ::close(fd_);
            throw NetError("bind " + host + ":" + std::to_string(port) + ": " +
                           std::strerror(errno));
        }
        if (::listen(fd_, 4) < 0) {
            ::close(fd_);
            throw NetError(std::string("listen: ") + std::strerror(errno));
        }
    }
    ~TcpLineServer() {
        if (fd_ >= 0) ::close(fd_);
    }
    TcpLineServer(const TcpLineServer&) = delete;
    TcpLineServer& operator=(const TcpLineServer&) = delete;

    template <typename Handler>
    void serve_forever(Handler&& handler) {
        while (true) {
            int client = ::accept(fd_, nullptr, nullptr);
            if (client < 0) return;
            std::string buffer;
            char chunk[4096];
            while (true) {
                size_t nl;
                while ((nl = buffer.find('\n')) != std::string::npos) {
                    std::string line = buffer.substr(0, nl);
                    buffer.erase(0, nl + 1);
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    std::string reply = handler(line) + "\n";
                    size_t off = 0;
                    while (off < reply.size()) {
                        ssize_t n = ::send(client, reply.data() + off, reply.size() - off, 0);
                        if (n <= 0) break;
                        off += static_cast<size_t>(n);
                    }
                }
                ssize_t n = ::recv(client, chunk, sizeof chunk, 0);
                if (n <= 0) break;
                buffer.append(chunk, static_cast<size_t>(n));
            }
            ::close(client);
        }
    }

private:
    int fd_ = -1;
};

}  // namespace homecrawl::net
