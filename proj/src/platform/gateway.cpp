#include "censorless/platform/gateway.hpp"

#include <httplib.h>

#include <stdexcept>

namespace censorless::platform {

struct Gateway::Impl {
    httplib::Server server;
};

Gateway::Gateway(PlatformEmulator& platform) : platform_(platform), impl_(std::make_unique<Impl>()) {
    impl_->server.new_task_queue = [] { return new httplib::ThreadPool(64); };
    impl_->server.set_payload_max_length(kExtendedPayloadCap + 1);
    impl_->server.set_read_timeout(20, 0);
    impl_->server.set_write_timeout(20, 0);
    // A pre-routing handler would run before the body is read, so every
    // method gets a catch-all route instead.
    auto handle = [this](const httplib::Request& req, httplib::Response& res) {
        http::Request request;
        request.method = req.method;
        request.target = req.target.empty() ? req.path : req.target;
        for (const auto& [k, v] : req.headers) {
            if (http::iequals(k, kSniHeader) || http::iequals(k, "REMOTE_ADDR") || http::iequals(k, "REMOTE_PORT") ||
                http::iequals(k, "LOCAL_ADDR") || http::iequals(k, "LOCAL_PORT"))
                continue;
            request.headers.add(k, v);
        }
        request.body = to_bytes(req.body);
        std::optional<std::string> sni;
        if (req.has_header(kSniHeader)) sni = req.get_header_value(kSniHeader);

        auto result = platform_.invoke(req.get_header_value("Host"), request, sni);
        res.status = result.response.status;
        std::string content_type = "application/octet-stream";
        for (const auto& [k, v] : result.response.headers.entries()) {
            if (http::iequals(k, "Content-Type")) {
                content_type = v;
            } else if (!http::iequals(k, "Content-Length") && !http::iequals(k, "Transfer-Encoding") &&
                       !http::iequals(k, "Connection")) {
                res.headers.emplace(k, v);
            }
        }
        res.set_content(censorless::to_string(result.response.body), content_type);
    };
    auto& s = impl_->server;
    s.Get(".*", handle);
    s.Post(".*", handle);
    s.Put(".*", handle);
    s.Patch(".*", handle);
    s.Delete(".*", handle);
    s.Options(".*", handle);
}

Gateway::~Gateway() { stop(); }

void Gateway::start(const std::string& host, std::uint16_t port) {
    host_ = host;
    if (port == 0) {
        int bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) throw std::runtime_error("gateway: cannot bind " + host);
        port_ = static_cast<std::uint16_t>(bound);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw std::runtime_error("gateway: cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void Gateway::stop() {
    if (thread_.joinable()) {
        impl_->server.stop();
        thread_.join();
    }
}

std::string Gateway::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace censorless::platform
