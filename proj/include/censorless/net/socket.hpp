#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "censorless/bytes.hpp"

namespace censorless::net {

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IpAddress {
    enum class Family { v4, v6 };

    Family family = Family::v4;
    // IPv4 uses the first four bytes.
    std::array<std::uint8_t, 16> bytes{};

    static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);
    static std::optional<IpAddress> parse(std::string_view text);

    std::string to_string() const;
    /// ::ffff:a.b.c.d becomes a.b.c.d; anything else is returned unchanged.
    IpAddress unmapped() const;

    friend bool operator==(const IpAddress&, const IpAddress&) = default;
};

/// getaddrinfo wrapper; IP literals are returned without a lookup. Empty on
/// failure.
std::vector<IpAddress> resolve(const std::string& host);

/// Minimal byte-stream interface so protocol code can run over sockets or
/// in-memory pipes.
class Stream {
public:
    virtual ~Stream() = default;
    /// Returns 0 at end of stream.
    virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
    virtual void write_all(ByteView data) = 0;

    /// Throws NetError if the stream ends first.
    void read_exact(std::span<std::uint8_t> buffer);
};

class TcpStream final : public Stream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    ~TcpStream() override;
    TcpStream(TcpStream&& other) noexcept;
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    static TcpStream connect(const IpAddress& address, std::uint16_t port, std::chrono::milliseconds timeout);
    /// Resolves `host` and tries each address in turn.
    static TcpStream connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

    std::size_t read_some(std::span<std::uint8_t> buffer) override;
    void write_all(ByteView data) override;

    /// Applies to subsequent blocking reads and writes; zero clears it.
    void set_timeout(std::chrono::milliseconds timeout);
    void set_send_timeout(std::chrono::milliseconds timeout);
    void shutdown_write();
    /// Unblocks readers on other threads without releasing the descriptor.
    void shutdown_both();
    void close();

    bool valid() const noexcept { return fd_ >= 0; }
    int fd() const noexcept { return fd_; }

private:
    int fd_ = -1;
};

class TcpListener {
public:
    TcpListener() = default;
    ~TcpListener();
    TcpListener(TcpListener&& other) noexcept;
    TcpListener& operator=(TcpListener&& other) noexcept;
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    /// Port 0 picks an ephemeral port.
    static TcpListener bind(const std::string& host, std::uint16_t port);

    /// Blocks; returns an invalid stream once the listener has been shut down.
    TcpStream accept();
    std::uint16_t port() const;
    /// Wakes a blocked accept() and closes the socket.
    void shutdown();

private:
    std::atomic<int> fd_{-1};
};

}  // namespace censorless::net
