#include "censorless/http/upstream.hpp"

#include <httplib.h>

#include "censorless/platform/gateway.hpp"

namespace censorless::http {

void HttpClient::add_override(const std::string& host, const std::string& base_url) {
    std::lock_guard lock(mutex_);
    overrides_[to_lower(host)] = base_url;
}

void HttpClient::remove_override(const std::string& host) {
    std::lock_guard lock(mutex_);
    overrides_.erase(to_lower(host));
}

HttpClient::Route HttpClient::route(const Url& connect) const {
    std::lock_guard lock(mutex_);
    auto host = to_lower(connect.host);
    if (auto it = overrides_.find(host); it != overrides_.end()) return Route{it->second, true};
    for (const auto& [pattern, base] : overrides_) {
        if (pattern.size() > 2 && pattern.compare(0, 2, "*.") == 0) {
            auto suffix = pattern.substr(1);
            if (host.size() > suffix.size() && host.compare(host.size() - suffix.size(), suffix.size(), suffix) == 0)
                return Route{base, true};
        }
    }
    return Route{connect.scheme + "://" + connect.authority(), false};
}

namespace {

httplib::Headers to_httplib(const Headers& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers.entries()) out.emplace(k, v);
    return out;
}

Headers from_httplib(const httplib::Headers& headers) {
    Headers out;
    for (const auto& [k, v] : headers) out.add(k, v);
    return out;
}

[[noreturn]] void raise(httplib::Error err, const Url& connect) {
    auto what = "upstream " + connect.authority() + ": " + httplib::to_string(err);
    switch (err) {
        case httplib::Error::Connection:
        case httplib::Error::SSLConnection:
        case httplib::Error::ConnectionTimeout:
            throw UpstreamError(UpstreamErrc::connect, what);
        case httplib::Error::Read:
        case httplib::Error::Write:
            throw UpstreamError(UpstreamErrc::io, what);
        default:
            throw UpstreamError(UpstreamErrc::io, what);
    }
}

}  // namespace

void HttpClient::send_streaming(const Url& connect, const Request& request, const StreamHandler& handler) {
    auto r = route(connect);
    httplib::Client client(r.scheme_host_port);
    auto secs = [](std::chrono::milliseconds ms) {
        return std::pair<time_t, time_t>(ms.count() / 1000, (ms.count() % 1000) * 1000);
    };
    auto [cs, cus] = secs(options_.connect_timeout);
    auto [ts, tus] = secs(options_.timeout);
    client.set_connection_timeout(cs, cus);
    client.set_read_timeout(ts, tus);
    client.set_write_timeout(ts, tus);
    client.set_keep_alive(false);
    client.set_decompress(false);
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
    client.enable_server_certificate_verification(options_.verify_tls);
#endif

    httplib::Request req;
    req.method = request.method;
    req.path = request.target;
    req.headers = to_httplib(request.headers);
    if (!request.headers.contains("Host")) req.headers.emplace("Host", connect.authority());
    if (r.emulated && connect.scheme == "https" && !request.headers.contains(platform::kSniHeader))
        req.headers.emplace(platform::kSniHeader, connect.host);
    req.body = to_string(request.body);
    if (!request.body.empty() && !request.headers.contains("Content-Type"))
        req.headers.emplace("Content-Type", "application/octet-stream");

    bool aborted = false;
    req.response_handler = [&](const httplib::Response& res) {
        if (handler.on_response && !handler.on_response(res.status, from_httplib(res.headers))) {
            aborted = true;
            return false;
        }
        return true;
    };
    req.content_receiver = [&](const char* data, std::size_t size, std::uint64_t, std::uint64_t) {
        if (handler.on_data && !handler.on_data(data, size)) {
            aborted = true;
            return false;
        }
        return true;
    };

    auto result = client.send(req);
    if (!result && !aborted) raise(result.error(), connect);
}

Response HttpClient::send(const Url& connect, const Request& request) {
    Response out;
    StreamHandler h;
    h.on_response = [&](int status, const Headers& headers) {
        out.status = status;
        out.headers = headers;
        return true;
    };
    h.on_data = [&](const char* data, std::size_t size) {
        out.body.insert(out.body.end(), data, data + size);
        return true;
    };
    send_streaming(connect, request, h);
    return out;
}

}  // namespace censorless::http
