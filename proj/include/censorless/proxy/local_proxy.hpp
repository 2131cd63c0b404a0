#pragma once

// The client-side proxy. Vanilla mode listens for plain HTTP proxy requests
// and replays them as HTTPS requests to the current bridge; private mode
// listens for SOCKS5 and tunnels through a PrivateSession. Both modes follow
// migration tags so the current bridge can change under live traffic.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "censorless/http/upstream.hpp"
#include "censorless/net/tcp_server.hpp"
#include "censorless/proxy/private_session.hpp"
#include "censorless/proxy/translate.hpp"

namespace censorless::proxy {

enum class Mode { vanilla, private_mode };

struct FrontingConfig {
    // Name presented as TLS SNI; the Host header keeps naming the bridge.
    std::string sni_host;
};

struct ProxyConfig {
    std::string listen_host = "127.0.0.1";
    std::uint16_t listen_port = 8080;  // 0 picks a free port
    std::string bridge_url;
    std::string client_id;
    // Zero disables the background poller; fetch_migration() still works.
    std::chrono::milliseconds migration_poll_interval = 5s;
    Mode mode = Mode::vanilla;
    std::optional<FrontingConfig> fronting;
    std::optional<protocol::SocksAddress> exit_server;
    std::optional<protocol::KeyPair> client_keypair;
    std::optional<protocol::PublicKey> server_public_key;
    SessionConfig session;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct MigrationTag {
    std::string new_bridge_url;
    std::chrono::system_clock::time_point issued_at;
};

struct ProxyStats {
    std::uint64_t requests = 0;
    std::uint64_t failures = 0;
    std::uint64_t migrations = 0;
    std::uint64_t poll_errors = 0;
};

class LocalProxy {
public:
    LocalProxy(ProxyConfig config, std::shared_ptr<http::Upstream> upstream);
    ~LocalProxy();
    LocalProxy(const LocalProxy&) = delete;
    LocalProxy& operator=(const LocalProxy&) = delete;

    void start();
    void stop();
    std::uint16_t port() const noexcept { return server_.port(); }
    const ProxyConfig& config() const noexcept { return config_; }

    std::string current_bridge() const;

    /// Polls the current bridge once. On a tag naming a different, well-formed
    /// function URL the bridge is swapped; requests already in flight finish
    /// on the old one. Network errors keep the current bridge.
    std::optional<MigrationTag> fetch_migration();

    /// Applies a piggybacked X-Migrate-To value. Returns whether it switched.
    bool observe_migration(const std::string& url);

    /// Outbound request for one browser exchange against the current bridge,
    /// fronted when configured.
    OutboundRequest prepare(const http::Request& exchange) const;

    /// Full vanilla round trip without the listener: translate, send,
    /// translate back.
    http::Response fetch(const http::Request& exchange);

    /// Transport used by the private session: one POST per frame.
    Bytes send_frame(const Bytes& frame);

    PrivateSession* session() noexcept { return session_.get(); }
    ProxyStats stats() const;

private:
    struct Bridge {
        std::string url;
        http::Url parsed;
    };
    std::shared_ptr<const Bridge> bridge() const;
    OutboundRequest route(OutboundRequest out, const Bridge& bridge) const;
    void serve_http(net::TcpStream& stream);
    void serve_socks(net::TcpStream& stream);
    void poll_loop();

    ProxyConfig config_;
    std::shared_ptr<http::Upstream> upstream_;
    std::unique_ptr<PrivateSession> session_;
    net::TcpServer server_;

    mutable std::mutex bridge_mutex_;
    std::shared_ptr<const Bridge> bridge_;

    mutable std::mutex stats_mutex_;
    ProxyStats stats_;

    std::thread poller_;
    std::mutex poll_mutex_;
    std::condition_variable poll_cv_;
    bool stopping_ = false;
};

/// Reads one HTTP/1.x request (head plus Content-Length body) from a stream.
/// nullopt on a clean close before any byte. Throws std::runtime_error on
/// malformed input.
std::optional<http::Request> read_http_request(net::Stream& stream);

}  // namespace censorless::proxy
