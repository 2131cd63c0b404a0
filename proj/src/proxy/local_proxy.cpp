#include "censorless/proxy/local_proxy.hpp"

#include <nlohmann/json.hpp>

#include <sstream>
#include <stdexcept>

#include "censorless/bridge/bridge.hpp"
#include "censorless/platform/url.hpp"
#include "censorless/proxy/socks5.hpp"

namespace censorless::proxy {

namespace {

constexpr std::size_t kMaxHead = 64 * 1024;
constexpr std::size_t kMaxBody = 20u << 20;

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

void write_simple(net::Stream& stream, int status, const std::string& message) {
    std::ostringstream out;
    out << "HTTP/1.1 " << status << ' ' << http::reason_phrase(status) << "\r\n"
        << "Content-Type: text/plain\r\nContent-Length: " << message.size() + 1 << "\r\nConnection: close\r\n\r\n"
        << message << '\n';
    stream.write_all(to_bytes(out.str()));
}

SocksReply reply_for(const std::optional<protocol::ErrorCode>& code) {
    if (!code) return SocksReply::general_failure;
    switch (*code) {
        case protocol::ErrorCode::forbidden_target: return SocksReply::not_allowed;
        case protocol::ErrorCode::connect_failed: return SocksReply::connection_refused;
        default: return SocksReply::general_failure;
    }
}

}  // namespace

void ProxyConfig::validate() const {
    if (bridge_url.empty()) throw std::invalid_argument("bridge_url: required");
    auto parsed = http::parse_url(bridge_url);
    if (!parsed) throw std::invalid_argument("bridge_url: not an http(s) URL: " + bridge_url);
    if (mode == Mode::private_mode) {
        if (!exit_server) throw std::invalid_argument("exit_server: required in private mode");
        if (!client_keypair) throw std::invalid_argument("client_keypair: required in private mode");
        if (!server_public_key) throw std::invalid_argument("server_public_key: required in private mode");
    }
    if (fronting && fronting->sni_host.empty()) throw std::invalid_argument("fronting.sni_host: empty");
}

std::optional<http::Request> read_http_request(net::Stream& stream) {
    std::string buf;
    std::uint8_t chunk[4096];
    std::size_t head_end = std::string::npos;
    while (head_end == std::string::npos) {
        auto n = stream.read_some(chunk);
        if (n == 0) {
            if (buf.empty()) return std::nullopt;
            throw std::runtime_error("connection closed inside request head");
        }
        buf.append(reinterpret_cast<const char*>(chunk), n);
        head_end = buf.find("\r\n\r\n");
        if (head_end == std::string::npos && buf.size() > kMaxHead) throw std::runtime_error("request head too large");
    }

    http::Request req;
    std::istringstream head(buf.substr(0, head_end));
    std::string line;
    std::getline(head, line);
    line = trim(line);
    auto sp1 = line.find(' ');
    auto sp2 = line.rfind(' ');
    if (sp1 == std::string::npos || sp2 == sp1) throw std::runtime_error("bad request line");
    req.method = line.substr(0, sp1);
    req.target = line.substr(sp1 + 1, sp2 - sp1 - 1);
    if (line.compare(sp2 + 1, 5, "HTTP/") != 0) throw std::runtime_error("bad protocol version");
    while (std::getline(head, line)) {
        line = trim(line);
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos || colon == 0) continue;  // unparseable headers are dropped
        req.headers.add(trim(line.substr(0, colon)), trim(line.substr(colon + 1)));
    }

    std::string body = buf.substr(head_end + 4);
    if (auto te = req.headers.get("Transfer-Encoding"); te && !http::iequals(*te, "identity"))
        throw std::runtime_error("chunked request bodies are not supported");
    std::size_t length = 0;
    if (auto cl = req.headers.get("Content-Length")) {
        try {
            length = std::stoul(*cl);
        } catch (const std::exception&) {
            throw std::runtime_error("bad Content-Length");
        }
    }
    if (length > kMaxBody) throw std::runtime_error("request body too large");
    if (body.size() > length) body.resize(length);
    while (body.size() < length) {
        auto n = stream.read_some(chunk);
        if (n == 0) throw std::runtime_error("connection closed inside request body");
        body.append(reinterpret_cast<const char*>(chunk), std::min(n, length - body.size()));
    }
    req.body = to_bytes(body);
    return req;
}

LocalProxy::LocalProxy(ProxyConfig config, std::shared_ptr<http::Upstream> upstream)
    : config_(std::move(config)),
      upstream_(std::move(upstream)),
      server_([this](net::TcpStream& s) {
          if (config_.mode == Mode::vanilla) {
              serve_http(s);
          } else {
              serve_socks(s);
          }
      }) {
    config_.validate();
    auto parsed = http::parse_url(config_.bridge_url);
    bridge_ = std::make_shared<const Bridge>(Bridge{config_.bridge_url, *parsed});
    if (config_.mode == Mode::private_mode) {
        session_ = std::make_unique<PrivateSession>(*config_.client_keypair, *config_.server_public_key,
                                                    *config_.exit_server,
                                                    [this](const Bytes& frame) { return send_frame(frame); },
                                                    config_.session);
    }
}

LocalProxy::~LocalProxy() { stop(); }

void LocalProxy::start() {
    server_.start(config_.listen_host, config_.listen_port);
    if (config_.migration_poll_interval.count() > 0) {
        {
            std::lock_guard lock(poll_mutex_);
            stopping_ = false;
        }
        poller_ = std::thread([this] { poll_loop(); });
    }
}

void LocalProxy::stop() {
    {
        std::lock_guard lock(poll_mutex_);
        stopping_ = true;
    }
    poll_cv_.notify_all();
    if (poller_.joinable()) poller_.join();
    server_.stop();
}

void LocalProxy::poll_loop() {
    std::unique_lock lock(poll_mutex_);
    while (!stopping_) {
        if (poll_cv_.wait_for(lock, config_.migration_poll_interval, [this] { return stopping_; })) break;
        lock.unlock();
        fetch_migration();
        lock.lock();
    }
}

std::shared_ptr<const LocalProxy::Bridge> LocalProxy::bridge() const {
    std::lock_guard lock(bridge_mutex_);
    return bridge_;
}

std::string LocalProxy::current_bridge() const { return bridge()->url; }

ProxyStats LocalProxy::stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

bool LocalProxy::observe_migration(const std::string& url) {
    if (!platform::parse_function_url(url)) return false;
    auto parsed = http::parse_url(url);
    if (!parsed) return false;
    {
        std::lock_guard lock(bridge_mutex_);
        if (bridge_->url == url) return false;
        bridge_ = std::make_shared<const Bridge>(Bridge{url, *parsed});
    }
    std::lock_guard lock(stats_mutex_);
    ++stats_.migrations;
    return true;
}

OutboundRequest LocalProxy::route(OutboundRequest out, const Bridge& b) const {
    if (!config_.client_id.empty()) out.request.headers.set(bridge::kClientHeader, config_.client_id);
    if (config_.fronting) return build_fronted_request(out, config_.fronting->sni_host, b.parsed.host);
    return out;
}

OutboundRequest LocalProxy::prepare(const http::Request& exchange) const {
    auto b = bridge();
    return route(translate_request(exchange, b->parsed), *b);
}

std::optional<MigrationTag> LocalProxy::fetch_migration() {
    auto b = bridge();
    OutboundRequest out;
    out.connect = b->parsed;
    out.request.method = "GET";
    out.request.target = bridge::kMigrationPath;
    out.request.headers.set("Host", b->parsed.host);
    out.request.headers.set("Accept", "application/json");
    out = route(std::move(out), *b);
    try {
        auto res = upstream_->send(out.connect, out.request);
        if (res.status != 200) throw std::runtime_error("status " + std::to_string(res.status));
        auto doc = nlohmann::json::parse(to_string(res.body));
        auto target = doc.value("migrate_to", nlohmann::json());
        if (!target.is_string()) return std::nullopt;
        MigrationTag tag{target.get<std::string>(), std::chrono::system_clock::now()};
        observe_migration(tag.new_bridge_url);
        return tag;
    } catch (const std::exception&) {
        std::lock_guard lock(stats_mutex_);
        ++stats_.poll_errors;
        return std::nullopt;
    }
}

http::Response LocalProxy::fetch(const http::Request& exchange) {
    {
        std::lock_guard lock(stats_mutex_);
        ++stats_.requests;
    }
    auto out = prepare(exchange);
    try {
        auto res = upstream_->send(out.connect, out.request);
        if (auto m = res.headers.get(bridge::kMigrateHeader)) observe_migration(*m);
        return translate_response(res);
    } catch (...) {
        std::lock_guard lock(stats_mutex_);
        ++stats_.failures;
        throw;
    }
}

Bytes LocalProxy::send_frame(const Bytes& frame) {
    auto b = bridge();
    OutboundRequest out;
    out.connect = b->parsed;
    out.request.method = "POST";
    out.request.target = "/";
    out.request.headers.set("Host", b->parsed.host);
    out.request.headers.set(bridge::kModeHeader, "private");
    out.request.headers.set("Content-Type", "application/octet-stream");
    out.request.body = frame;
    out = route(std::move(out), *b);
    auto res = upstream_->send(out.connect, out.request);
    if (auto m = res.headers.get(bridge::kMigrateHeader)) observe_migration(*m);
    if (res.status != 200)
        throw std::runtime_error("bridge answered " + std::to_string(res.status) + ": " + to_string(res.body));
    return res.body;
}

void LocalProxy::serve_http(net::TcpStream& stream) {
    stream.set_timeout(std::chrono::seconds(30));
    std::optional<http::Request> req;
    try {
        req = read_http_request(stream);
    } catch (const std::exception& e) {
        write_simple(stream, 400, e.what());
        return;
    }
    if (!req) return;
    // Origin-form requests (proxy used transparently) are rebuilt from Host.
    if (!req->target.empty() && req->target.front() == '/') {
        auto host = req->headers.get("Host");
        if (!host) {
            write_simple(stream, 400, "missing Host");
            return;
        }
        req->target = "http://" + *host + req->target;
    }
    {
        std::lock_guard lock(stats_mutex_);
        ++stats_.requests;
    }

    OutboundRequest out;
    try {
        out = prepare(*req);
    } catch (const TranslateError& e) {
        write_simple(stream, req->method == "GET" || req->method == "POST" ? 400 : 405, e.what());
        return;
    }

    bool headers_sent = false;
    std::unique_ptr<BodyTranslator> body;
    http::StreamHandler handler;
    handler.on_response = [&](int status, const http::Headers& headers) {
        if (auto m = headers.get(bridge::kMigrateHeader)) observe_migration(*m);
        body = std::make_unique<BodyTranslator>(headers);
        auto translated = translate_response_headers(headers);
        if (body->decodes()) translated.remove("Content-Encoding");
        std::ostringstream head;
        head << "HTTP/1.1 " << status << ' ' << http::reason_phrase(status) << "\r\n";
        for (const auto& [k, v] : translated.entries()) head << k << ": " << v << "\r\n";
        // Unmodified bodies keep their length; rewritten ones end at close.
        if (!body->rewrites())
            if (auto cl = headers.get("Content-Length")) head << "Content-Length: " << *cl << "\r\n";
        head << "Connection: close\r\n\r\n";
        stream.write_all(to_bytes(head.str()));
        headers_sent = true;
        return true;
    };
    handler.on_data = [&](const char* data, std::size_t size) {
        auto piece = body->feed(std::string_view(data, size));
        if (!piece.empty()) stream.write_all(to_bytes(piece));
        return true;
    };
    try {
        upstream_->send_streaming(out.connect, out.request, handler);
        if (body) {
            auto tail = body->finish();
            if (!tail.empty()) stream.write_all(to_bytes(tail));
        }
    } catch (const std::exception& e) {
        {
            std::lock_guard lock(stats_mutex_);
            ++stats_.failures;
        }
        if (!headers_sent) write_simple(stream, 502, std::string("bridge request failed: ") + e.what());
        return;
    }
    stream.shutdown_write();
}

void LocalProxy::serve_socks(net::TcpStream& stream) {
    protocol::SocksAddress target;
    try {
        target = socks_accept(stream);
    } catch (const std::exception&) {
        return;
    }
    {
        std::lock_guard lock(stats_mutex_);
        ++stats_.requests;
    }
    protocol::ConnectionId conn;
    try {
        conn = session_->open(target);
    } catch (const SessionError& e) {
        {
            std::lock_guard lock(stats_mutex_);
            ++stats_.failures;
        }
        socks_reply(stream, reply_for(e.code()));
        return;
    }
    socks_reply(stream, SocksReply::succeeded);
    session_->pump(stream, conn);
}

}  // namespace censorless::proxy
