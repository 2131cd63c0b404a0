#include "censorless/bridge/bridge.hpp"

#include <nlohmann/json.hpp>

#include <array>

#include "censorless/exit/listener.hpp"
#include "censorless/platform/gateway.hpp"

namespace censorless::bridge {

namespace {

constexpr std::array kHopByHop = {"Connection", "Keep-Alive",       "Proxy-Connection", "Proxy-Authenticate",
                                  "Proxy-Authorization", "TE", "Trailer", "Transfer-Encoding", "Upgrade"};

bool is_hop_by_hop(std::string_view name) {
    for (const char* h : kHopByHop)
        if (http::iequals(name, h)) return true;
    return false;
}

http::Response error_response(int status, const std::string& kind, const std::string& message) {
    http::Response r;
    r.status = status;
    r.headers.set("Content-Type", "text/plain");
    r.headers.set(kErrorHeader, kind);
    r.body = to_bytes(message + "\n");
    return r;
}

const char* upstream_kind(http::UpstreamErrc code) {
    switch (code) {
        case http::UpstreamErrc::connect: return "upstream-connect";
        case http::UpstreamErrc::timeout: return "upstream-timeout";
        default: return "upstream-io";
    }
}

std::string query_param(const std::string& target, const std::string& name) {
    auto q = target.find('?');
    if (q == std::string::npos) return {};
    std::string_view rest(target);
    rest.remove_prefix(q + 1);
    while (!rest.empty()) {
        auto amp = rest.find('&');
        auto pair = rest.substr(0, amp);
        auto eq = pair.find('=');
        if (eq != std::string_view::npos && pair.substr(0, eq) == name) return std::string(pair.substr(eq + 1));
        if (amp == std::string_view::npos) break;
        rest.remove_prefix(amp + 1);
    }
    return {};
}

std::string path_of(const std::string& target) { return target.substr(0, target.find('?')); }

}  // namespace

std::string migration_tag_key(const std::string& client_id) { return "migrate:" + client_id; }

std::string client_id_of(const http::Request& req) {
    if (auto h = req.headers.get(kClientHeader)) return *h;
    return query_param(req.target, "client");
}

net::TcpStream dial_exit(const protocol::SocksAddress& address, std::chrono::milliseconds timeout) {
    if (address.type == protocol::AddressType::domain) return net::TcpStream::connect(address.host(), address.port, timeout);
    auto ip = net::IpAddress::parse(address.host());
    if (!ip) throw net::NetError("bad exit address");
    return net::TcpStream::connect(*ip, address.port, timeout);
}

Bridge::Bridge(BridgeConfig config, std::shared_ptr<http::Upstream> upstream, ExitDialer dialer)
    : config_(std::move(config)), upstream_(std::move(upstream)), dialer_(std::move(dialer)) {
    if (!dialer_) dialer_ = dial_exit;
}

platform::Handler Bridge::handler() const {
    return [this](platform::InvocationContext& ctx, const http::Request& req) { return handle_invocation(ctx, req); };
}

http::Response Bridge::handle_invocation(const platform::InvocationContext& ctx, const http::Request& req) const {
    http::Response res;
    if (req.body.size() > config_.payload_cap) {
        res = error_response(413, "payload", "request body exceeds the payload cap");
    } else if (path_of(req.target) == kMigrationPath) {
        res = handle_tag(ctx, req);
    } else if (auto mode = req.headers.get(kModeHeader); mode && http::iequals(*mode, "private")) {
        res = relay_private(req);
    } else if (mode && !http::iequals(*mode, "vanilla")) {
        res = error_response(400, "dispatch", "unknown mode " + *mode);
    } else if (req.headers.contains(kHostHeader)) {
        res = forward_vanilla(req);
    } else {
        res = error_response(400, "dispatch", "missing X-Host");
    }

    if (auto client = client_id_of(req); !client.empty()) {
        if (auto tag = ctx.get_tag(migration_tag_key(client))) res.headers.set(kMigrateHeader, *tag);
    }
    return res;
}

http::Response Bridge::handle_tag(const platform::InvocationContext& ctx, const http::Request& req) const {
    auto client = client_id_of(req);
    nlohmann::json body = {{"migrate_to", nullptr}};
    if (!client.empty()) {
        if (auto tag = ctx.get_tag(migration_tag_key(client))) body["migrate_to"] = *tag;
    }
    http::Response r;
    r.headers.set("Content-Type", "application/json");
    r.headers.set("Cache-Control", "no-store");
    r.body = to_bytes(body.dump());
    return r;
}

http::Response Bridge::forward_vanilla(const http::Request& req) const {
    auto destination = req.headers.get(kHostHeader);
    if (!destination || destination->empty()) return error_response(400, "client", "missing X-Host");
    auto path = req.target.empty() || req.target.front() != '/' ? "/" + req.target : req.target;
    auto url = http::parse_url(config_.upstream_scheme + "://" + *destination + path);
    if (!url) return error_response(400, "client", "invalid X-Host");

    http::Request out;
    out.method = req.method;
    out.target = url->path;
    for (const auto& [k, v] : req.headers.entries()) {
        if (is_hop_by_hop(k) || http::iequals(k, kHostHeader) || http::iequals(k, "Host") ||
            http::iequals(k, "Content-Length") || http::iequals(k, kModeHeader) || http::iequals(k, kClientHeader) ||
            http::iequals(k, platform::kSniHeader))
            continue;
        out.headers.add(k, v);
    }
    out.headers.set("Host", url->authority());
    out.body = req.body;

    http::Response upstream_res;
    try {
        upstream_res = upstream_->send(*url, out);
    } catch (const http::UpstreamError& e) {
        return error_response(502, upstream_kind(e.code()), e.what());
    }
    if (upstream_res.body.size() > config_.payload_cap)
        return error_response(502, "payload", "upstream response exceeds the payload cap");

    http::Response res;
    res.status = upstream_res.status;
    for (const auto& [k, v] : upstream_res.headers.entries()) {
        if (is_hop_by_hop(k) || http::iequals(k, "Content-Length")) continue;
        res.headers.add(k, v);
    }
    res.body = std::move(upstream_res.body);
    return res;
}

http::Response Bridge::relay_private(const http::Request& req) const {
    protocol::PrivateRequestMessage msg;
    try {
        auto total = protocol::request_frame_length(req.body);
        if (!total || *total != req.body.size()) return error_response(400, "client", "incomplete private frame (" + std::to_string(req.body.size()) + " bytes, header says " + (total ? std::to_string(*total) : std::string("?")) + ")");
        msg = protocol::decode_request(req.body);
    } catch (const std::exception& e) {
        return error_response(400, "client", std::string("malformed private frame: ") + e.what());
    }

    Bytes reply;
    try {
        auto stream = dialer_(msg.server_address, config_.exit_timeout);
        stream.set_timeout(config_.exit_timeout);
        // The received bytes go out verbatim; the envelope is never opened here.
        stream.write_all(req.body);
        reply = exit::read_response_frame(stream);
    } catch (const std::exception& e) {
        return error_response(502, "exit-unreachable", e.what());
    }

    http::Response res;
    res.headers.set("Content-Type", "application/octet-stream");
    res.body = std::move(reply);
    return res;
}

}  // namespace censorless::bridge
