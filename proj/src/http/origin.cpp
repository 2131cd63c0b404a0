#include "censorless/http/origin.hpp"

#include <httplib.h>

#include <random>
#include <stdexcept>

namespace censorless::http {

struct TestOrigin::Impl {
    httplib::Server server;
};

std::string TestOrigin::index_html() {
    return "<!doctype html>\n"
           "<html><head><title>origin.test</title>\n"
           "<link rel=\"stylesheet\" href=\"https://origin.test/style.css\">\n"
           "</head><body>\n"
           "<h1>Test origin</h1>\n"
           "<a href=\"https://origin.test/a\">a</a>\n"
           "<a href=\"https://news.example/world\">news</a>\n"
           "<img src=\"https://cdn.example/logo.png\">\n"
           "<p>Scheme-relative //origin.test/x and plain http://origin.test/y stay as they are.</p>\n"
           "</body></html>\n";
}

std::string TestOrigin::app_json() {
    return R"({"self":"https://origin.test/app.json","links":["https://origin.test/a","https://cdn.example/b"]})";
}

Bytes TestOrigin::deterministic_bytes(std::size_t n) {
    std::mt19937 rng(20240601u);
    Bytes out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng() & 0xff);
    return out;
}

Bytes TestOrigin::binary_blob() {
    auto out = deterministic_bytes(200 * 1024);
    // Binary bodies must never be rewritten even when they happen to contain
    // the marker.
    auto marker = to_bytes("https://origin.test/");
    for (std::size_t at : {std::size_t{0}, std::size_t{4096}, out.size() - marker.size()})
        std::copy(marker.begin(), marker.end(), out.begin() + static_cast<std::ptrdiff_t>(at));
    return out;
}

TestOrigin::TestOrigin() : impl_(std::make_unique<Impl>()) {
    auto& s = impl_->server;
    s.new_task_queue = [] { return new httplib::ThreadPool(16); };
    s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response&) {
        OriginRecord r;
        r.method = req.method;
        r.host = req.get_header_value("Host");
        r.target = req.target;
        for (const auto& [k, v] : req.headers) {
            if (k == "REMOTE_ADDR" || k == "REMOTE_PORT" || k == "LOCAL_ADDR" || k == "LOCAL_PORT") continue;
            r.headers.add(k, v);
        }
        r.body_size = req.body.size();
        std::lock_guard lock(mutex_);
        log_.push_back(std::move(r));
        return httplib::Server::HandlerResponse::Unhandled;
    });
    s.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(index_html(), "text/html; charset=utf-8"); });
    s.Get("/a", [](const httplib::Request&, httplib::Response& res) { res.set_content("a\n", "text/plain"); });
    s.Get("/app.json", [](const httplib::Request&, httplib::Response& res) { res.set_content(app_json(), "application/json"); });
    s.Get("/data.bin", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(to_string(binary_blob()), "application/octet-stream");
    });
    s.Get("/bytes", [](const httplib::Request& req, httplib::Response& res) {
        std::size_t n = 1024;
        if (req.has_param("n")) n = std::stoul(req.get_param_value("n"));
        res.set_content(to_string(deterministic_bytes(n)), "application/octet-stream");
    });
    s.Get("/redirect", [](const httplib::Request& req, httplib::Response& res) {
        res.status = 302;
        res.set_header("Location", "https://" + req.get_header_value("Host") + "/");
        res.set_content("moved\n", "text/plain");
    });
    s.Get("/sts", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Strict-Transport-Security", "max-age=31536000; includeSubDomains");
        res.set_header("Upgrade-Insecure-Requests", "1");
        res.set_content("see https://origin.test/\n", "text/plain");
    });
    s.Post("/echo", [](const httplib::Request& req, httplib::Response& res) {
        auto type = req.get_header_value("Content-Type");
        res.set_content(req.body, type.empty() ? "application/octet-stream" : type);
    });
}

TestOrigin::~TestOrigin() { stop(); }

void TestOrigin::start(const std::string& host, std::uint16_t port) {
    host_ = host;
    if (port == 0) {
        int bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) throw std::runtime_error("origin: cannot bind " + host);
        port_ = static_cast<std::uint16_t>(bound);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw std::runtime_error("origin: cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void TestOrigin::stop() {
    if (thread_.joinable()) {
        impl_->server.stop();
        thread_.join();
    }
}

std::string TestOrigin::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

std::vector<OriginRecord> TestOrigin::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

void TestOrigin::clear_requests() {
    std::lock_guard lock(mutex_);
    log_.clear();
}

EchoServer::EchoServer()
    : tcp_([](net::TcpStream& stream) {
          std::vector<std::uint8_t> buf(64 * 1024);
          for (;;) {
              auto n = stream.read_some(buf);
              if (n == 0) return;
              stream.write_all(ByteView(buf.data(), n));
          }
      }) {}

}  // namespace censorless::http
