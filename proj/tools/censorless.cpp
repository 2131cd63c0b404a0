// censorless: command-line entry point for every component.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <signal.h>
#include <sys/stat.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "censorless/cost/cost_model.hpp"
#include "censorless/deployment.hpp"
#include "censorless/exit/listener.hpp"
#include "censorless/proxy/local_proxy.hpp"
#include "censorless/sim/simulator.hpp"

namespace fs = std::filesystem;
using namespace censorless;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

sigset_t termination_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    return set;
}

// Blocks until SIGINT/SIGTERM or until `seconds` pass (when > 0).
void wait_for_shutdown(double seconds) {
    auto set = termination_signals();
    if (seconds > 0) {
        timespec ts{static_cast<time_t>(seconds), static_cast<long>((seconds - static_cast<time_t>(seconds)) * 1e9)};
        sigtimedwait(&set, nullptr, &ts);
    } else {
        int sig = 0;
        sigwait(&set, &sig);
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 32 raw bytes or 64 hex characters (surrounding whitespace ignored).
std::array<std::uint8_t, 32> read_key32(const fs::path& path) {
    auto text = read_file(path);
    Bytes raw;
    if (text.size() == 32) {
        raw = to_bytes(text);
    } else {
        auto b = text.find_first_not_of(" \t\r\n");
        auto e = text.find_last_not_of(" \t\r\n");
        if (b == std::string::npos) throw Failure(path.string() + ": empty key file");
        try {
            raw = hex_decode(text.substr(b, e - b + 1));
        } catch (const std::exception&) {
            throw Failure(path.string() + ": not 32 raw bytes or 64 hex characters");
        }
    }
    if (raw.size() != 32) throw Failure(path.string() + ": key must be 32 bytes");
    std::array<std::uint8_t, 32> out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

std::array<std::uint8_t, 32> parse_key_arg(const std::string& value) {
    if (value.size() == 64) {
        try {
            auto raw = hex_decode(value);
            std::array<std::uint8_t, 32> out{};
            std::copy(raw.begin(), raw.end(), out.begin());
            return out;
        } catch (const std::exception&) {
        }
    }
    return read_key32(value);
}

protocol::SocksAddress parse_host_port(const std::string& text, const char* field) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) throw Failure(std::string(field) + ": expected host:port");
    auto host = text.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    int port = 0;
    try {
        port = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        port = -1;
    }
    if (port <= 0 || port > 65535) throw Failure(std::string(field) + ": bad port in " + text);
    return protocol::SocksAddress::from_host(host, static_cast<std::uint16_t>(port));
}

void write_private_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure("cannot write " + path.string());
    out << content;
    out.close();
    fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
}

void write_output(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure("cannot write " + path.string());
    out << content;
}

// keygen ---------------------------------------------------------------------

struct KeygenArgs {
    std::string out = ".";
    std::string name = "censorless";
    std::string seed;
    bool force = false;
};

int run_keygen(const KeygenArgs& a) {
    fs::path dir(a.out);
    fs::create_directories(dir);
    auto key_path = dir / (a.name + ".key");
    auto pub_path = dir / (a.name + ".pub");
    if (!a.force && (fs::exists(key_path) || fs::exists(pub_path)))
        throw Failure("refusing to overwrite " + key_path.string() + " or " + pub_path.string() + " (use --force)");
    std::optional<protocol::Seed> seed;
    if (!a.seed.empty()) {
        Bytes raw;
        try {
            raw = hex_decode(a.seed);
        } catch (const std::exception&) {
            throw Failure("--seed: expected 64 hex characters");
        }
        if (raw.size() != 32) throw Failure("--seed: expected 32 bytes");
        seed.emplace();
        std::copy(raw.begin(), raw.end(), seed->begin());
    }
    auto kp = protocol::generate_keypair(seed);
    write_private_file(key_path, hex_encode(kp.secret_key.seed()) + "\n");
    write_private_file(pub_path, hex_encode(kp.public_key) + "\n");
    std::cout << hex_encode(kp.public_key) << "\n";
    return 0;
}

// exit-server ----------------------------------------------------------------

struct ExitArgs {
    std::string listen = "0.0.0.0:9000";
    std::string key;
    double idle_timeout = 120;
    double buffer_timeout = 60;
    std::size_t max_buffer = 4u << 20;
    bool allow_loopback = false;
    double run_for = 0;
};

int run_exit(const ExitArgs& a) {
    if (a.key.empty()) throw Failure("--key: required");
    auto kp = protocol::generate_keypair(read_key32(a.key));
    exit::ExitConfig cfg;
    cfg.idle_timeout = std::chrono::milliseconds(static_cast<long>(a.idle_timeout * 1000));
    cfg.buffer_timeout = std::chrono::milliseconds(static_cast<long>(a.buffer_timeout * 1000));
    cfg.max_buffer_bytes = a.max_buffer;
    net::SsrfPolicy policy;
    if (a.allow_loopback) policy.exempt(net::DenyReason::loopback);
    exit::ExitServer server(kp, cfg, policy);
    exit::ExitListener listener(server);
    auto addr = parse_host_port(a.listen, "--listen");
    listener.start(addr.host(), addr.port);
    std::cout << "exit server listening on " << addr.host() << ":" << listener.port() << "\n"
              << "public key " << hex_encode(kp.public_key) << std::endl;
    wait_for_shutdown(a.run_for);
    listener.stop();
    server.shutdown();
    return 0;
}

// proxy ----------------------------------------------------------------------

struct ProxyArgs {
    std::string listen_host = "127.0.0.1";
    int port = 8080;
    std::string bridge;
    std::string client_id;
    std::string mode = "vanilla";
    double poll_interval = 5;
    double keepalive = 15;
    std::string front_sni;
    std::string exit_server;
    std::string client_key;
    std::string server_pub;
    std::string gateway;
    double run_for = 0;
};

int run_proxy(const ProxyArgs& a) {
    proxy::ProxyConfig cfg;
    cfg.listen_host = a.listen_host;
    if (a.port < 0 || a.port > 65535) throw Failure("--port: out of range");
    cfg.listen_port = static_cast<std::uint16_t>(a.port);
    cfg.bridge_url = a.bridge;
    cfg.client_id = a.client_id;
    cfg.migration_poll_interval = std::chrono::milliseconds(static_cast<long>(a.poll_interval * 1000));
    cfg.session.keepalive_interval = std::chrono::milliseconds(static_cast<long>(a.keepalive * 1000));
    if (a.mode == "private") {
        cfg.mode = proxy::Mode::private_mode;
    } else if (a.mode != "vanilla") {
        throw Failure("--mode: expected vanilla or private");
    }
    if (!a.front_sni.empty()) cfg.fronting = proxy::FrontingConfig{a.front_sni};
    if (cfg.mode == proxy::Mode::private_mode) {
        if (a.exit_server.empty()) throw Failure("--exit: required in private mode");
        if (a.server_pub.empty()) throw Failure("--server-pub: required in private mode");
        cfg.exit_server = parse_host_port(a.exit_server, "--exit");
        cfg.server_public_key = parse_key_arg(a.server_pub);
        cfg.client_keypair = a.client_key.empty() ? protocol::generate_keypair()
                                                  : protocol::generate_keypair(read_key32(a.client_key));
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw Failure(e.what());
    }

    auto upstream = std::make_shared<http::HttpClient>();
    if (!a.gateway.empty()) upstream->add_override("*.on.aws", a.gateway);
    proxy::LocalProxy p(cfg, upstream);
    p.start();
    std::cout << (cfg.mode == proxy::Mode::vanilla ? "HTTP" : "SOCKS5") << " proxy listening on " << cfg.listen_host
              << ":" << p.port() << "\nbridge " << p.current_bridge() << std::endl;
    wait_for_shutdown(a.run_for);
    p.stop();
    return 0;
}

// emulate --------------------------------------------------------------------

struct EmulateArgs {
    std::string host = "127.0.0.1";
    int gateway_port = 0;
    int exit_port = 0;
    int origin_port = 0;
    int echo_port = 0;
    double refresh = 20;
    double grace = 15;
    std::size_t batch = 3;
    std::vector<std::string> regions{"us-east-1", "eu-west-1"};
    std::string log;
    std::string client_id = "client-1";
    std::string exit_seed;
    std::uint64_t seed = 1;
    double cold_start_ms = 400;
    double run_for = 0;
};

int run_emulate(const EmulateArgs& a) {
    DeploymentConfig cfg;
    cfg.listen_host = a.host;
    cfg.gateway_port = static_cast<std::uint16_t>(a.gateway_port);
    cfg.exit_port = static_cast<std::uint16_t>(a.exit_port);
    cfg.origin_port = static_cast<std::uint16_t>(a.origin_port);
    cfg.echo_port = static_cast<std::uint16_t>(a.echo_port);
    cfg.orchestrator.refresh_interval = std::chrono::milliseconds(static_cast<long>(a.refresh * 1000));
    cfg.orchestrator.grace = std::chrono::milliseconds(static_cast<long>(a.grace * 1000));
    cfg.orchestrator.batch_size = a.batch;
    cfg.orchestrator.regions = a.regions;
    cfg.orchestrator.log_path = a.log;
    cfg.orchestrator.seed = a.seed;
    cfg.emulator.seed = a.seed;
    cfg.emulator.cold_start = std::chrono::milliseconds(static_cast<long>(a.cold_start_ms));
    if (!a.exit_seed.empty()) {
        auto raw = hex_decode(a.exit_seed);
        if (raw.size() != 32) throw Failure("--exit-seed: expected 32 bytes");
        cfg.exit_seed.emplace();
        std::copy(raw.begin(), raw.end(), cfg.exit_seed->begin());
    }
    if (a.batch == 0) throw Failure("--batch: must be at least 1");
    if (a.regions.empty()) throw Failure("--regions: at least one region");

    Deployment d(cfg);
    d.start();
    auto bridge = d.register_client(a.client_id);
    nlohmann::json info = {
        {"gateway", d.gateway().base_url()},
        {"client_id", a.client_id},
        {"bridge_url", bridge},
        {"exit_server", d.exit_address().host() + ":" + std::to_string(d.exit_address().port)},
        {"exit_public_key", hex_encode(d.exit_public_key())},
        {"origin", d.origin_url()},
        {"origin_listen", d.origin().base_url()},
        {"echo_port", d.echo().port()},
    };
    std::cout << bridge << "\n" << info.dump(2) << std::endl;
    wait_for_shutdown(a.run_for);
    d.stop();
    return 0;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
    std::string preset;
    std::string out = "sim-out";
    std::uint64_t seed = 1;
    int seeds = 1;
    std::optional<int> horizon, n_clients, n_proxies, proxy_capacity, censor_period, refresh_period,
        censor_block_delay;
    std::optional<double> censor_fraction, omega, utilization_cap;
    std::string strategy;
    std::string identifiers;
    std::optional<bool> shared_intelligence;
};

int run_simulate(const SimulateArgs& a) {
    std::vector<std::pair<std::string, sim::SimParams>> runs;
    auto base = [&](const std::string& name) -> sim::SimParams {
        auto p = sim::preset(name);
        if (!p) throw Failure("--preset: unknown preset " + name);
        return *p;
    };
    if (a.preset == "fig11") {
        runs.emplace_back("fig11-aggressive", base("fig11-aggressive"));
        runs.emplace_back("fig11-optimal", base("fig11-optimal"));
    } else if (!a.preset.empty()) {
        runs.emplace_back(a.preset, base(a.preset));
    } else {
        runs.emplace_back("custom", sim::SimParams{});
    }

    nlohmann::json summary = nlohmann::json::object();
    for (auto& [name, p] : runs) {
        p.seed = a.seed;
        if (a.horizon) p.horizon = *a.horizon;
        if (a.n_clients) p.n_clients = *a.n_clients;
        if (a.n_proxies) p.n_proxies = *a.n_proxies;
        if (a.proxy_capacity) p.proxy_capacity = *a.proxy_capacity;
        if (a.censor_period) p.censor_period = *a.censor_period;
        if (a.refresh_period) p.refresh_period = *a.refresh_period;
        if (a.censor_block_delay) p.censor_block_delay = *a.censor_block_delay;
        if (a.censor_fraction) p.censor_fraction = *a.censor_fraction;
        if (a.omega) p.omega = *a.omega;
        if (a.utilization_cap) p.utilization_cap = *a.utilization_cap;
        if (a.shared_intelligence) p.shared_intelligence = *a.shared_intelligence;
        if (a.strategy == "aggressive") p.strategy = sim::CensorStrategy::aggressive;
        else if (a.strategy == "optimal") p.strategy = sim::CensorStrategy::optimal;
        else if (!a.strategy.empty()) throw Failure("--strategy: expected aggressive or optimal");
        if (a.identifiers == "ip") p.identifiers = sim::IdentifierKind::ip;
        else if (a.identifiers == "url") p.identifiers = sim::IdentifierKind::url;
        else if (!a.identifiers.empty()) throw Failure("--identifiers: expected url or ip");
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw Failure(e.what());
        }
        auto r = sim::run_seeds(p, a.seeds);
        write_output(fs::path(a.out) / (name + ".csv"), sim::to_csv(r.series));
        summary[name] = {{"mean_connected", r.mean_connected},
                         {"mean_nonblocked", r.mean_nonblocked},
                         {"seeds", a.seeds},
                         {"first_seed", a.seed}};
        std::cout << name << ": mean_connected=" << r.mean_connected << " mean_nonblocked=" << r.mean_nonblocked
                  << "\n";
    }
    // A single run keeps the flat {mean_connected, mean_nonblocked} shape.
    auto doc = runs.size() == 1 ? summary.begin().value() : summary;
    write_output(fs::path(a.out) / "summary.json", doc.dump(2) + "\n");
    return 0;
}

// cost -----------------------------------------------------------------------

struct CostArgs {
    std::string preset = "fig8";
    std::string format = "text";
    std::string out;
    std::string pricing;
};

int run_cost(const CostArgs& a) {
    cost::PricingSchedule s;
    if (!a.pricing.empty()) {
        try {
            s = cost::PricingSchedule::from_json(read_file(a.pricing));
        } catch (const std::invalid_argument& e) {
            throw Failure(e.what());
        } catch (const nlohmann::json::exception& e) {
            throw Failure(std::string("--pricing: ") + e.what());
        }
    }
    cost::Table t;
    if (a.preset == "fig8") t = cost::fig8_table(s);
    else if (a.preset == "fig9") t = cost::fig9_table(s);
    else if (a.preset == "fig13") t = cost::fig13_table(s);
    else throw Failure("--preset: expected fig8, fig9 or fig13");
    if (a.format != "text" && a.format != "csv") throw Failure("--format: expected text or csv");
    auto body = a.format == "csv" ? t.to_csv() : t.to_text();
    std::cout << body;
    if (!a.out.empty()) {
        write_output(fs::path(a.out) / (a.preset + ".csv"), t.to_csv());
        write_output(fs::path(a.out) / (a.preset + ".txt"), t.to_text());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    // Termination signals are consumed synchronously by wait_for_shutdown;
    // block them before any thread starts so they all inherit the mask.
    auto set = termination_signals();
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    CLI::App app{"CensorLess: serverless censorship circumvention"};
    app.set_config("--config", "", "TOML/INI file with option values (sections per subcommand)");
    app.require_subcommand(1);

    KeygenArgs kg;
    auto* keygen = app.add_subcommand("keygen", "Generate an Ed25519 keypair (<name>.key, <name>.pub)");
    keygen->add_option("--out", kg.out, "Output directory")->capture_default_str();
    keygen->add_option("--name", kg.name, "File name stem")->capture_default_str();
    keygen->add_option("--seed", kg.seed, "Deterministic 32-byte seed as hex (tests only)");
    keygen->add_flag("--force", kg.force, "Overwrite existing files");

    ExitArgs ex;
    auto* exit_cmd = app.add_subcommand("exit-server", "Run the private-mode exit server");
    exit_cmd->add_option("--listen", ex.listen, "host:port to listen on")->capture_default_str();
    exit_cmd->add_option("--key", ex.key, "Secret key file (32 raw bytes or hex seed)")->required();
    exit_cmd->add_option("--idle-timeout", ex.idle_timeout, "Seconds before idle target connections close")
        ->capture_default_str();
    exit_cmd->add_option("--buffer-timeout", ex.buffer_timeout, "Seconds an undrained client buffer is kept")
        ->capture_default_str();
    exit_cmd->add_option("--max-buffer", ex.max_buffer, "Per-client buffer limit in bytes")->capture_default_str();
    exit_cmd->add_flag("--allow-loopback", ex.allow_loopback, "Exempt loopback from SSRF filtering (testing only)");
    exit_cmd->add_option("--run-for", ex.run_for, "Exit after this many seconds (0: until signal)");

    ProxyArgs px;
    auto* proxy_cmd = app.add_subcommand("proxy", "Run the local proxy");
    proxy_cmd->add_option("--listen-host", px.listen_host)->capture_default_str();
    proxy_cmd->add_option("--port", px.port, "Listen port (0 picks one)")->capture_default_str();
    proxy_cmd->add_option("--bridge", px.bridge, "Initial bridge URL")->required();
    proxy_cmd->add_option("--client-id", px.client_id, "Identifier used for migration tags");
    proxy_cmd->add_option("--mode", px.mode, "vanilla (HTTP proxy) or private (SOCKS5)")->capture_default_str();
    proxy_cmd->add_option("--poll-interval", px.poll_interval, "Migration poll interval in seconds")
        ->capture_default_str();
    proxy_cmd->add_option("--keepalive", px.keepalive, "Private-mode keepalive interval in seconds")
        ->capture_default_str();
    proxy_cmd->add_option("--front-sni", px.front_sni, "Domain-fronting SNI host");
    proxy_cmd->add_option("--exit", px.exit_server, "Exit server host:port (private mode)");
    proxy_cmd->add_option("--client-key", px.client_key, "Client secret key file (private mode; random if absent)");
    proxy_cmd->add_option("--server-pub", px.server_pub, "Exit server public key: hex or key file");
    proxy_cmd->add_option("--gateway", px.gateway, "Reach *.on.aws through this emulator gateway URL");
    proxy_cmd->add_option("--run-for", px.run_for, "Exit after this many seconds (0: until signal)");

    EmulateArgs em;
    auto* emulate = app.add_subcommand("emulate", "Run origin, platform emulator, bridges, orchestrator and exit server");
    emulate->add_option("--host", em.host, "Listen address for every component")->capture_default_str();
    emulate->add_option("--gateway-port", em.gateway_port)->capture_default_str();
    emulate->add_option("--exit-port", em.exit_port)->capture_default_str();
    emulate->add_option("--origin-port", em.origin_port)->capture_default_str();
    emulate->add_option("--echo-port", em.echo_port)->capture_default_str();
    emulate->add_option("--refresh", em.refresh, "Bridge refresh interval in seconds")->capture_default_str();
    emulate->add_option("--grace", em.grace, "Drain grace period in seconds")->capture_default_str();
    emulate->add_option("--batch", em.batch, "Bridges per batch")->capture_default_str();
    emulate->add_option("--regions", em.regions, "Regions for new bridges")->capture_default_str();
    emulate->add_option("--log", em.log, "Mapping log (JSON lines)");
    emulate->add_option("--client-id", em.client_id, "Client to register up front")->capture_default_str();
    emulate->add_option("--exit-seed", em.exit_seed, "Exit server seed as hex (tests only)");
    emulate->add_option("--seed", em.seed, "Emulator and orchestrator RNG seed")->capture_default_str();
    emulate->add_option("--cold-start-ms", em.cold_start_ms)->capture_default_str();
    emulate->add_option("--run-for", em.run_for, "Exit after this many seconds (0: until signal)");

    SimulateArgs sm;
    auto* simulate = app.add_subcommand("simulate", "Run the censorship simulation");
    simulate->add_option("--preset", sm.preset, "fig7, fig10, fig11 (both strategies), fig11-aggressive, fig11-optimal");
    simulate->add_option("--out", sm.out, "Output directory")->capture_default_str();
    simulate->add_option("--seed", sm.seed, "First seed")->capture_default_str();
    simulate->add_option("--seeds", sm.seeds, "Number of seeds to average")->capture_default_str();
    simulate->add_option("--horizon", sm.horizon);
    simulate->add_option("--clients", sm.n_clients);
    simulate->add_option("--proxies", sm.n_proxies);
    simulate->add_option("--proxy-capacity", sm.proxy_capacity);
    simulate->add_option("--censor-period", sm.censor_period);
    simulate->add_option("--refresh-period", sm.refresh_period, "0 disables rotation");
    simulate->add_option("--block-delay", sm.censor_block_delay);
    simulate->add_option("--censor-fraction", sm.censor_fraction);
    simulate->add_option("--omega", sm.omega);
    simulate->add_option("--utilization-cap", sm.utilization_cap);
    simulate->add_option("--strategy", sm.strategy, "aggressive or optimal");
    simulate->add_option("--identifiers", sm.identifiers, "url or ip");
    simulate->add_option("--shared-intelligence", sm.shared_intelligence, "true or false");

    CostArgs cs;
    auto* cost_cmd = app.add_subcommand("cost", "Print cost tables");
    cost_cmd->add_option("--preset", cs.preset, "fig8, fig9 or fig13")->capture_default_str();
    cost_cmd->add_option("--format", cs.format, "text or csv")->capture_default_str();
    cost_cmd->add_option("--out", cs.out, "Also write <preset>.csv and <preset>.txt here");
    cost_cmd->add_option("--pricing", cs.pricing, "JSON file overriding pricing fields");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*keygen) return run_keygen(kg);
        if (*exit_cmd) return run_exit(ex);
        if (*proxy_cmd) return run_proxy(px);
        if (*emulate) return run_emulate(em);
        if (*simulate) return run_simulate(sm);
        if (*cost_cmd) return run_cost(cs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
