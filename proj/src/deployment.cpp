#include "censorless/deployment.hpp"

#include <stdexcept>

namespace censorless {

namespace {

template <typename F>
void start_component(const char* name, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(name) + ": " + e.what());
    }
}

}  // namespace

Deployment::Deployment(DeploymentConfig config, Clock& clock)
    : config_(std::move(config)), clock_(clock), exit_keys_(protocol::generate_keypair(config_.exit_seed)) {
    origin_ = std::make_unique<http::TestOrigin>();
    echo_ = std::make_unique<http::EchoServer>();
    platform_ = std::make_unique<platform::PlatformEmulator>(config_.emulator, clock_);
    gateway_ = std::make_unique<platform::Gateway>(*platform_);
    http::ClientOptions options;
    options.timeout = config_.bridge.upstream_timeout;
    bridge_upstream_ = std::make_shared<http::HttpClient>(options);
    bridge_ = std::make_unique<bridge::Bridge>(config_.bridge, bridge_upstream_);
    orchestrator_ = std::make_unique<orchestrator::Orchestrator>(
        *platform_, [this] { return bridge_->handler(); }, config_.orchestrator, clock_);
}

Deployment::~Deployment() { stop(); }

void Deployment::start() {
    if (started_) return;
    start_component("origin", [&] { origin_->start(config_.listen_host, config_.origin_port); });
    start_component("echo", [&] { echo_->start(config_.listen_host, config_.echo_port); });
    bridge_upstream_->add_override(config_.origin_host, origin_->base_url());
    start_component("gateway", [&] { gateway_->start(config_.listen_host, config_.gateway_port); });

    if (config_.start_exit_server) {
        net::SsrfPolicy policy;
        // The origin lives on loopback in this harness.
        policy.exempt(net::DenyReason::loopback);
        auto loopback = net::IpAddress::parse(config_.listen_host).value_or(net::IpAddress::v4(127, 0, 0, 1));
        exit_ = std::make_unique<exit::ExitServer>(exit_keys_, config_.exit, policy,
                                                   exit::make_resolver({{config_.origin_host, loopback}}),
                                                   exit::Dialer{}, clock_);
        exit_listener_ = std::make_unique<exit::ExitListener>(*exit_);
        start_component("exit-server", [&] { exit_listener_->start(config_.listen_host, config_.exit_port); });
    }

    orchestrator_->tick(clock_.now());
    if (config_.background_refresh) orchestrator_->run_background();
    started_ = true;
}

void Deployment::stop() {
    if (orchestrator_) orchestrator_->stop();
    if (orchestrator_) orchestrator_->flush();
    if (exit_listener_) exit_listener_->stop();
    if (exit_) exit_->shutdown();
    if (gateway_) gateway_->stop();
    if (echo_) echo_->stop();
    if (origin_) origin_->stop();
    started_ = false;
}

std::string Deployment::register_client(const std::string& client_id) {
    auto d = orchestrator_->register_client(client_id);
    if (!d) throw std::runtime_error("no active bridge to assign; deployment not started?");
    return d->url;
}

std::shared_ptr<http::HttpClient> Deployment::client_upstream() const {
    auto client = std::make_shared<http::HttpClient>(http::ClientOptions{std::chrono::seconds(5), std::chrono::seconds(15), true});
    client->add_override("*.on.aws", gateway_->base_url());
    return client;
}

proxy::ProxyConfig Deployment::proxy_config(const std::string& client_id, proxy::Mode mode) {
    proxy::ProxyConfig cfg;
    cfg.listen_host = config_.listen_host;
    cfg.listen_port = 0;
    cfg.client_id = client_id;
    cfg.bridge_url = register_client(client_id);
    cfg.mode = mode;
    if (mode == proxy::Mode::private_mode) {
        cfg.exit_server = exit_address();
        cfg.client_keypair = protocol::generate_keypair();
        cfg.server_public_key = exit_keys_.public_key;
    }
    return cfg;
}

protocol::SocksAddress Deployment::exit_address() const {
    return protocol::SocksAddress::from_host(config_.listen_host, exit_listener_ ? exit_listener_->port() : 0);
}

std::string Deployment::origin_url(const std::string& path) const { return "http://" + config_.origin_host + path; }

}  // namespace censorless
