#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include "censorless/http/message.hpp"

namespace censorless::http {

using namespace std::chrono_literals;

enum class UpstreamErrc { connect, timeout, io, bad_url };

class UpstreamError : public std::runtime_error {
public:
    UpstreamError(UpstreamErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    UpstreamErrc code() const noexcept { return code_; }

private:
    UpstreamErrc code_;
};

/// Callbacks for incremental response delivery. Returning false aborts the
/// transfer.
struct StreamHandler {
    std::function<bool(int status, const Headers& headers)> on_response;
    std::function<bool(const char* data, std::size_t size)> on_data;
};

/// Outbound HTTP(S) client. The connection goes to `connect` (whose host is
/// also the TLS SNI); the Host header in `request` may name something else,
/// which is how fronted requests are expressed.
class Upstream {
public:
    virtual ~Upstream() = default;
    virtual Response send(const Url& connect, const Request& request) = 0;
    virtual void send_streaming(const Url& connect, const Request& request, const StreamHandler& handler) = 0;
};

struct ClientOptions {
    std::chrono::milliseconds connect_timeout = 5s;
    std::chrono::milliseconds timeout = 12s;
    bool verify_tls = true;
};

/// cpp-httplib backed client. Hosts listed in the override table are reached
/// over plain HTTP at the given base URL (for example an emulator gateway);
/// for those the intended SNI travels in the X-Emulated-SNI header.
class HttpClient final : public Upstream {
public:
    explicit HttpClient(ClientOptions options = {}) : options_(options) {}

    /// host -> "http://127.0.0.1:port". Names are matched case-insensitively;
    /// a pattern "*.example" matches every subdomain of example.
    void add_override(const std::string& host, const std::string& base_url);
    void remove_override(const std::string& host);

    Response send(const Url& connect, const Request& request) override;
    void send_streaming(const Url& connect, const Request& request, const StreamHandler& handler) override;

private:
    struct Route {
        std::string scheme_host_port;
        bool emulated = false;
    };
    Route route(const Url& connect) const;

    ClientOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> overrides_;
};

}  // namespace censorless::http
