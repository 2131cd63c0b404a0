#pragma once

// Client half of private mode. One session per client key; any number of
// SOCKS connections share it. Every request is sealed to the exit server,
// stamped with the next nonce and sent through the bridge one at a time, so
// nonces reach the exit server in order. Responses are routed to connections
// by connection id, whichever connection's request fetched them.

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "censorless/net/socket.hpp"
#include "censorless/protocol/messages.hpp"
#include "censorless/protocol/nonce.hpp"

namespace censorless::proxy {

using namespace std::chrono_literals;

/// Carries one encoded request frame to the exit server (normally through a
/// bridge) and returns the encoded response frame. Throws on transport
/// failure.
using FrameTransport = std::function<Bytes(const Bytes& frame)>;

class SessionError : public std::runtime_error {
public:
    SessionError(std::optional<protocol::ErrorCode> code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    /// Empty for transport or decoding failures.
    std::optional<protocol::ErrorCode> code() const noexcept { return code_; }

private:
    std::optional<protocol::ErrorCode> code_;
};

struct SessionConfig {
    // Poll pacing while a connection is idle: starts at poll_min after the
    // last data and backs off to min(poll_max, keepalive_interval).
    std::chrono::milliseconds poll_min = 20ms;
    std::chrono::milliseconds poll_max = 1s;
    std::chrono::milliseconds keepalive_interval = 15s;
    std::size_t chunk_size = 64 * 1024;
    // After the local client stops sending, keep pulling target output until
    // this long passes without any.
    std::chrono::milliseconds linger = 2s;
};

/// Microseconds since the Unix epoch; used as the first nonce so restarted
/// clients keep moving forward.
std::uint64_t time_based_nonce();

class PrivateSession {
public:
    PrivateSession(protocol::KeyPair client, protocol::PublicKey server, protocol::SocksAddress exit_address,
                   FrameTransport transport, SessionConfig config = {}, std::uint64_t first_nonce = time_based_nonce());

    const protocol::PublicKey& client_key() const noexcept { return client_.public_key; }
    const SessionConfig& config() const noexcept { return config_; }

    /// Builds the sealed request frame for `msg` with the next nonce.
    Bytes seal_request(const protocol::InnerMessage& msg);

    /// Sends one message and returns the decoded response. A REPLAY answer
    /// (nonce desync) moves the counter forward and retries once.
    protocol::PrivateResponseMessage exchange(const protocol::InnerMessage& msg);

    /// Asks the exit server to connect. Throws SessionError carrying the
    /// server's error code on refusal.
    protocol::ConnectionId open(const protocol::SocksAddress& target);

    /// Relays between `client` and an established connection until either
    /// side closes.
    void pump(net::TcpStream& client, const protocol::ConnectionId& conn);

    std::uint64_t frames_sent() const;
    std::uint64_t keepalives_sent() const;

private:
    struct Inbox {
        std::mutex mutex;
        std::condition_variable cv;
        std::deque<protocol::PrivateResponseMessage> queue;
    };

    /// exchange() plus routing: responses for other registered connections
    /// go to their inboxes; anything else is returned.
    std::optional<protocol::PrivateResponseMessage> exchange_routed(const protocol::InnerMessage& msg);
    void deliver(const protocol::PrivateResponseMessage& msg, std::optional<protocol::PrivateResponseMessage>& mine);

    protocol::KeyPair client_;
    protocol::PublicKey server_;
    protocol::SocksAddress exit_address_;
    FrameTransport transport_;
    SessionConfig config_;
    protocol::NonceCounter nonces_;

    std::mutex send_mutex_;
    mutable std::mutex state_mutex_;
    std::map<std::uint64_t, std::shared_ptr<Inbox>> inboxes_;
    std::uint64_t frames_ = 0;
    std::uint64_t keepalives_ = 0;
};

}  // namespace censorless::proxy
