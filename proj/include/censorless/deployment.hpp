#pragma once

// All-in-one emulated deployment: test origin and echo service, platform
// emulator behind a loopback gateway, bridge batches managed by the
// orchestrator, and an exit server. Used by the `emulate` command and the
// end-to-end tests.

#include <memory>
#include <optional>
#include <string>

#include "censorless/bridge/bridge.hpp"
#include "censorless/exit/exit_server.hpp"
#include "censorless/exit/listener.hpp"
#include "censorless/http/origin.hpp"
#include "censorless/http/upstream.hpp"
#include "censorless/orchestrator/orchestrator.hpp"
#include "censorless/platform/gateway.hpp"
#include "censorless/proxy/local_proxy.hpp"

namespace censorless {

struct DeploymentConfig {
    std::string listen_host = "127.0.0.1";
    std::uint16_t gateway_port = 0;
    std::uint16_t origin_port = 0;
    std::uint16_t echo_port = 0;
    std::uint16_t exit_port = 0;
    // Name under which the test origin is reachable from bridges and the
    // exit server.
    std::string origin_host = "origin.test";
    platform::EmulatorConfig emulator;
    orchestrator::OrchestratorConfig orchestrator;
    bridge::BridgeConfig bridge;
    exit::ExitConfig exit;
    std::optional<protocol::Seed> exit_seed;
    bool start_exit_server = true;
    // Run orchestrator ticks on a background thread; tests driving a
    // virtual clock call tick() themselves.
    bool background_refresh = true;
};

class Deployment {
public:
    explicit Deployment(DeploymentConfig config, Clock& clock = system_clock());
    ~Deployment();
    Deployment(const Deployment&) = delete;
    Deployment& operator=(const Deployment&) = delete;

    /// Starts every component and deploys the first batch. Bind failures are
    /// rethrown as std::runtime_error prefixed with the component name.
    void start();
    void stop();

    /// Registers a client and returns its bridge URL.
    std::string register_client(const std::string& client_id);

    /// Client-side upstream that reaches any emulated function URL through
    /// the gateway.
    std::shared_ptr<http::HttpClient> client_upstream() const;

    /// Proxy configuration for `client_id`, registered on the way. Private
    /// mode gets a fresh client keypair and this deployment's exit server.
    proxy::ProxyConfig proxy_config(const std::string& client_id, proxy::Mode mode = proxy::Mode::vanilla);

    protocol::SocksAddress exit_address() const;
    std::string origin_url(const std::string& path = "/") const;

    Clock& clock() noexcept { return clock_; }
    const DeploymentConfig& config() const noexcept { return config_; }
    platform::PlatformEmulator& platform() noexcept { return *platform_; }
    platform::Gateway& gateway() noexcept { return *gateway_; }
    orchestrator::Orchestrator& orchestrator() noexcept { return *orchestrator_; }
    exit::ExitServer* exit_server() noexcept { return exit_.get(); }
    http::TestOrigin& origin() noexcept { return *origin_; }
    http::EchoServer& echo() noexcept { return *echo_; }
    const protocol::PublicKey& exit_public_key() const noexcept { return exit_keys_.public_key; }

private:
    DeploymentConfig config_;
    Clock& clock_;
    protocol::KeyPair exit_keys_;
    std::unique_ptr<http::TestOrigin> origin_;
    std::unique_ptr<http::EchoServer> echo_;
    std::unique_ptr<platform::PlatformEmulator> platform_;
    std::unique_ptr<platform::Gateway> gateway_;
    std::shared_ptr<http::HttpClient> bridge_upstream_;
    std::unique_ptr<bridge::Bridge> bridge_;
    std::unique_ptr<orchestrator::Orchestrator> orchestrator_;
    std::unique_ptr<exit::ExitServer> exit_;
    std::unique_ptr<exit::ExitListener> exit_listener_;
    bool started_ = false;
};

}  // namespace censorless
