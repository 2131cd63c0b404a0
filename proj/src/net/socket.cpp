#include "censorless/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <algorithm>
#include <cstring>
#include <utility>

namespace censorless::net {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

socklen_t fill_sockaddr(const IpAddress& address, std::uint16_t port, sockaddr_storage& storage) {
    std::memset(&storage, 0, sizeof storage);
    if (address.family == IpAddress::Family::v4) {
        auto* sin = reinterpret_cast<sockaddr_in*>(&storage);
        sin->sin_family = AF_INET;
        sin->sin_port = htons(port);
        std::memcpy(&sin->sin_addr, address.bytes.data(), 4);
        return sizeof(sockaddr_in);
    }
    auto* sin6 = reinterpret_cast<sockaddr_in6*>(&storage);
    sin6->sin6_family = AF_INET6;
    sin6->sin6_port = htons(port);
    std::memcpy(&sin6->sin6_addr, address.bytes.data(), 16);
    return sizeof(sockaddr_in6);
}

}  // namespace

IpAddress IpAddress::v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    IpAddress ip;
    ip.bytes[0] = a;
    ip.bytes[1] = b;
    ip.bytes[2] = c;
    ip.bytes[3] = d;
    return ip;
}

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
    std::string s(text);
    if (s.size() > 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    IpAddress ip;
    if (inet_pton(AF_INET, s.c_str(), ip.bytes.data()) == 1) return ip;
    if (inet_pton(AF_INET6, s.c_str(), ip.bytes.data()) == 1) {
        ip.family = Family::v6;
        return ip;
    }
    return std::nullopt;
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(family == Family::v4 ? AF_INET : AF_INET6, bytes.data(), buf, sizeof buf);
    return buf;
}

IpAddress IpAddress::unmapped() const {
    if (family != Family::v6) return *this;
    static constexpr std::uint8_t prefix[12] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0xff, 0xff};
    if (std::memcmp(bytes.data(), prefix, 12) != 0) return *this;
    return v4(bytes[12], bytes[13], bytes[14], bytes[15]);
}

std::vector<IpAddress> resolve(const std::string& host) {
    if (auto literal = IpAddress::parse(host)) return {*literal};
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0) return {};
    std::vector<IpAddress> out;
    for (auto* p = res; p; p = p->ai_next) {
        IpAddress ip;
        if (p->ai_family == AF_INET) {
            std::memcpy(ip.bytes.data(), &reinterpret_cast<sockaddr_in*>(p->ai_addr)->sin_addr, 4);
        } else if (p->ai_family == AF_INET6) {
            ip.family = IpAddress::Family::v6;
            std::memcpy(ip.bytes.data(), &reinterpret_cast<sockaddr_in6*>(p->ai_addr)->sin6_addr, 16);
        } else {
            continue;
        }
        if (std::find(out.begin(), out.end(), ip) == out.end()) out.push_back(ip);
    }
    freeaddrinfo(res);
    return out;
}

void Stream::read_exact(std::span<std::uint8_t> buffer) {
    std::size_t got = 0;
    while (got < buffer.size()) {
        auto n = read_some(buffer.subspan(got));
        if (n == 0) throw NetError("stream closed before expected bytes arrived");
        got += n;
    }
}

TcpStream::~TcpStream() { close(); }

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

TcpStream TcpStream::connect(const IpAddress& address, std::uint16_t port, std::chrono::milliseconds timeout) {
    sockaddr_storage storage;
    socklen_t len = fill_sockaddr(address, port, storage);
    int fd = ::socket(storage.ss_family, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw NetError(errno_text("socket"));
    TcpStream stream(fd);

    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&storage), len);
    if (rc != 0 && errno != EINPROGRESS) throw NetError(errno_text("connect"));
    if (rc != 0) {
        pollfd pfd{fd, POLLOUT, 0};
        int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (ready == 0) throw NetError("connect: timed out");
        if (ready < 0) throw NetError(errno_text("poll"));
        int err = 0;
        socklen_t errlen = sizeof err;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &errlen);
        if (err != 0) {
            errno = err;
            throw NetError(errno_text("connect"));
        }
    }
    fcntl(fd, F_SETFL, flags);
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return stream;
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
    auto addresses = resolve(host);
    if (addresses.empty()) throw NetError("cannot resolve " + host);
    std::string last_error;
    for (const auto& a : addresses) {
        try {
            return connect(a, port, timeout);
        } catch (const NetError& e) {
            last_error = e.what();
        }
    }
    throw NetError(last_error);
}

std::size_t TcpStream::read_some(std::span<std::uint8_t> buffer) {
    if (fd_ < 0) throw NetError("read on closed stream");
    for (;;) {
        auto n = ::recv(fd_, buffer.data(), buffer.size(), 0);
        if (n >= 0) return static_cast<std::size_t>(n);
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetError("read timed out");
        if (errno == ECONNRESET) return 0;
        throw NetError(errno_text("recv"));
    }
}

void TcpStream::write_all(ByteView data) {
    if (fd_ < 0) throw NetError("write on closed stream");
    std::size_t sent = 0;
    while (sent < data.size()) {
        auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetError(errno_text("send"));
        }
        sent += static_cast<std::size_t>(n);
    }
}

void TcpStream::set_timeout(std::chrono::milliseconds timeout) {
    if (fd_ < 0) return;
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void TcpStream::set_send_timeout(std::chrono::milliseconds timeout) {
    if (fd_ < 0) return;
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void TcpStream::shutdown_write() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void TcpStream::shutdown_both() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpStream::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

TcpListener::~TcpListener() { shutdown(); }

TcpListener::TcpListener(TcpListener&& other) noexcept : fd_(other.fd_.exchange(-1)) {}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
    if (this != &other) {
        shutdown();
        fd_ = other.fd_.exchange(-1);
    }
    return *this;
}

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port) {
    auto ip = IpAddress::parse(host);
    if (!ip) {
        auto resolved = resolve(host);
        if (resolved.empty()) throw NetError("cannot resolve listen address " + host);
        ip = resolved.front();
    }
    sockaddr_storage storage;
    socklen_t len = fill_sockaddr(*ip, port, storage);
    int fd = ::socket(storage.ss_family, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw NetError(errno_text("socket"));
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&storage), len) != 0) {
        auto msg = errno_text(("bind " + host + ":" + std::to_string(port)).c_str());
        ::close(fd);
        throw NetError(msg);
    }
    if (::listen(fd, 128) != 0) {
        auto msg = errno_text("listen");
        ::close(fd);
        throw NetError(msg);
    }
    TcpListener l;
    l.fd_.store(fd);
    return l;
}

TcpStream TcpListener::accept() {
    for (;;) {
        int listen_fd = fd_.load();
        if (listen_fd < 0) return TcpStream();
        int fd = ::accept4(listen_fd, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd >= 0) {
            int one = 1;
            setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return TcpStream(fd);
        }
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return TcpStream();
    }
}

std::uint16_t TcpListener::port() const {
    sockaddr_storage storage{};
    socklen_t len = sizeof storage;
    if (getsockname(fd_, reinterpret_cast<sockaddr*>(&storage), &len) != 0) return 0;
    if (storage.ss_family == AF_INET) return ntohs(reinterpret_cast<sockaddr_in*>(&storage)->sin_port);
    return ntohs(reinterpret_cast<sockaddr_in6*>(&storage)->sin6_port);
}

void TcpListener::shutdown() {
    int fd = fd_.exchange(-1);
    if (fd >= 0) {
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
    }
}

}  // namespace censorless::net
