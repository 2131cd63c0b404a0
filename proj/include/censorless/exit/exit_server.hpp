#pragma once

// Exit-server core: decrypts private-mode frames, enforces nonce and
// connection-ownership rules, dials targets, and buffers target output per
// client until the client polls for it.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "censorless/clock.hpp"
#include "censorless/net/socket.hpp"
#include "censorless/net/ssrf.hpp"
#include "censorless/protocol/messages.hpp"
#include "censorless/protocol/nonce.hpp"

namespace censorless::exit {

using namespace std::chrono_literals;

struct ExitConfig {
    std::chrono::milliseconds idle_timeout = 120s;
    // A client's buffer is dropped when it has not been drained for this long.
    std::chrono::milliseconds buffer_timeout = 60s;
    std::size_t max_buffer_bytes = 4u << 20;
    // 0 means no limit on the number of queued messages.
    std::size_t max_buffer_messages = 0;
    std::chrono::milliseconds connect_timeout = 10s;
    // How long a Data request waits for target output before answering with
    // an empty DataResponse.
    std::chrono::milliseconds poll_wait = 250ms;
    std::size_t read_chunk = 64 * 1024;
};

using Dialer = std::function<net::TcpStream(const net::IpAddress&, std::uint16_t, std::chrono::milliseconds)>;

/// getaddrinfo, with fixed answers for the names in `overrides`.
net::Resolver make_resolver(std::map<std::string, net::IpAddress> overrides = {});

struct ExpireResult {
    std::size_t closed_connections = 0;
    std::size_t dropped_buffers = 0;
};

struct ExitStats {
    std::uint64_t frames = 0;
    std::uint64_t errors = 0;
    std::uint64_t dropped_messages = 0;
    std::size_t open_connections = 0;
};

class ExitServer {
public:
    ExitServer(protocol::KeyPair keys, ExitConfig config = {}, net::SsrfPolicy policy = {},
               net::Resolver resolver = make_resolver(), Dialer dialer = {}, Clock& clock = system_clock());
    ~ExitServer();
    ExitServer(const ExitServer&) = delete;
    ExitServer& operator=(const ExitServer&) = delete;

    const protocol::PublicKey& public_key() const noexcept { return keys_.public_key; }
    const ExitConfig& config() const noexcept { return config_; }

    /// Full request path: decode, open, dispatch, seal. Returns an encoded
    /// response frame; never throws for bad input.
    Bytes handle_frame(ByteView frame);

    /// Dispatch on an already opened payload. The result is not sealed.
    protocol::PrivateResponseMessage handle_payload(const protocol::RequestPayload& payload);

    /// Oldest buffered response for the client, FIFO, one message per call.
    std::optional<protocol::PrivateResponseMessage> drain_buffer(const protocol::PublicKey& client);

    /// Queues a response for a client, dropping the oldest entries when the
    /// buffer limits would be exceeded.
    void enqueue(const protocol::PublicKey& client, protocol::PrivateResponseMessage msg);

    ExpireResult expire(Clock::time_point now);
    ExpireResult expire() { return expire(clock_.now()); }

    std::size_t buffered_bytes(const protocol::PublicKey& client) const;
    std::size_t buffered_messages(const protocol::PublicKey& client) const;
    std::uint64_t dropped_messages(const protocol::PublicKey& client) const;
    ExitStats stats() const;

    /// Closes every target connection and stops reader threads.
    void shutdown();

private:
    struct Connection;
    struct Entry {
        protocol::PrivateResponseMessage msg;
        std::size_t bytes = 0;
        Clock::time_point queued_at;
    };
    struct ClientBuffer {
        std::deque<Entry> entries;
        std::size_t total_bytes = 0;
        Clock::time_point last_drain;
        std::uint64_t dropped = 0;
    };

    protocol::PrivateResponseMessage start(const protocol::RequestPayload& payload,
                                           const protocol::StartConnection& msg);
    protocol::PrivateResponseMessage data(const protocol::RequestPayload& payload, const protocol::DataMessage& msg);
    protocol::PrivateResponseMessage close(const protocol::RequestPayload& payload,
                                           const protocol::CloseConnection& msg);
    protocol::PrivateResponseMessage error(const protocol::ConnectionId& conn, protocol::ErrorCode code,
                                           std::string message);

    void reader_loop(std::shared_ptr<Connection> conn);
    void enqueue_locked(const protocol::PublicKey& client, protocol::PrivateResponseMessage msg);
    ClientBuffer& buffer_locked(const protocol::PublicKey& client);
    std::optional<protocol::PrivateResponseMessage> pop_locked(const protocol::PublicKey& client, bool coalesce);
    void retire(std::shared_ptr<Connection> conn);

    protocol::KeyPair keys_;
    ExitConfig config_;
    net::SsrfPolicy policy_;
    net::Resolver resolver_;
    Dialer dialer_;
    Clock& clock_;
    protocol::NonceTable nonces_;

    mutable std::mutex mutex_;
    std::condition_variable changed_;
    std::map<std::uint64_t, std::shared_ptr<Connection>> connections_;
    std::map<protocol::PublicKey, ClientBuffer> buffers_;
    std::uint64_t next_id_ = 1;
    bool stopping_ = false;
    ExitStats stats_;
    std::atomic<std::uint64_t> errors_{0};
};

}  // namespace censorless::exit
