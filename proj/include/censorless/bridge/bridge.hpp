#pragma once

// The serverless function body. One handler serves three kinds of traffic:
// migration-tag polls, vanilla forwarding by X-Host, and private-mode relay
// of opaque frames to the exit server.

#include <chrono>
#include <functional>
#include <memory>
#include <string>

#include "censorless/http/upstream.hpp"
#include "censorless/net/socket.hpp"
#include "censorless/platform/emulator.hpp"
#include "censorless/protocol/messages.hpp"

namespace censorless::bridge {

using namespace std::chrono_literals;

inline constexpr const char* kMigrationPath = "/__migration";
inline constexpr const char* kModeHeader = "X-CL-Mode";
inline constexpr const char* kHostHeader = "X-Host";
inline constexpr const char* kMigrateHeader = "X-Migrate-To";
inline constexpr const char* kClientHeader = "X-CL-Client";
/// Set on bridge-generated errors: "client", "payload", "upstream-connect",
/// "upstream-timeout", "upstream-io", "exit-unreachable", "dispatch".
inline constexpr const char* kErrorHeader = "X-CL-Error";

/// Platform tag key under which a client's next bridge URL is stored.
std::string migration_tag_key(const std::string& client_id);

/// Connects to the exit server named in a frame.
using ExitDialer = std::function<net::TcpStream(const protocol::SocksAddress&, std::chrono::milliseconds)>;

struct BridgeConfig {
    std::chrono::milliseconds upstream_timeout = 12s;
    std::chrono::milliseconds exit_timeout = 12s;
    std::size_t payload_cap = platform::kDefaultPayloadCap;
    // Scheme used toward X-Host destinations.
    std::string upstream_scheme = "https";
};

class Bridge {
public:
    Bridge(BridgeConfig config, std::shared_ptr<http::Upstream> upstream, ExitDialer dialer = {});

    /// Dispatch: /__migration -> tag handler; X-CL-Mode: private -> relay;
    /// otherwise X-Host -> vanilla forward. Pending tags for the calling
    /// client ride along in X-Migrate-To on every response.
    http::Response handle_invocation(const platform::InvocationContext& ctx, const http::Request& req) const;

    http::Response handle_tag(const platform::InvocationContext& ctx, const http::Request& req) const;
    http::Response forward_vanilla(const http::Request& req) const;
    http::Response relay_private(const http::Request& req) const;

    /// Adapter for PlatformEmulator::deploy.
    platform::Handler handler() const;

    const BridgeConfig& config() const noexcept { return config_; }

private:
    BridgeConfig config_;
    std::shared_ptr<http::Upstream> upstream_;
    ExitDialer dialer_;
};

/// Resolves and connects; the default ExitDialer.
net::TcpStream dial_exit(const protocol::SocksAddress& address, std::chrono::milliseconds timeout);

/// Client id carried by a request (X-CL-Client header or ?client= query).
std::string client_id_of(const http::Request& req);

}  // namespace censorless::bridge
