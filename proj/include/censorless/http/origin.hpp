#pragma once

// Deterministic origin used by the emulated deployment and the tests: a small
// web site plus a raw TCP echo service.

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "censorless/http/message.hpp"
#include "censorless/net/tcp_server.hpp"

namespace censorless::http {

struct OriginRecord {
    std::string method;
    std::string host;
    std::string target;
    Headers headers;
    std::size_t body_size = 0;
};

/// Routes:
///   GET  /            HTML page with absolute https links
///   GET  /app.json    JSON document containing https URLs
///   GET  /data.bin    binary blob (contains the bytes "https:" on purpose)
///   GET  /bytes?n=N   N deterministic bytes, application/octet-stream
///   GET  /redirect    302 to https://<host>/
///   GET  /sts         text/plain with Strict-Transport-Security set
///   POST /echo        echoes the body and its Content-Type
///   anything else     404
class TestOrigin {
public:
    TestOrigin();
    ~TestOrigin();
    TestOrigin(const TestOrigin&) = delete;
    TestOrigin& operator=(const TestOrigin&) = delete;

    void start(const std::string& host = "127.0.0.1", std::uint16_t port = 0);
    void stop();
    std::uint16_t port() const noexcept { return port_; }
    std::string base_url() const;

    std::vector<OriginRecord> requests() const;
    void clear_requests();

    static std::string index_html();
    static std::string app_json();
    static Bytes binary_blob();
    static Bytes deterministic_bytes(std::size_t n);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    std::string host_;
    std::uint16_t port_ = 0;
    mutable std::mutex mutex_;
    std::vector<OriginRecord> log_;
};

/// Echoes every byte back on the same connection until the peer closes.
class EchoServer {
public:
    EchoServer();
    void start(const std::string& host = "127.0.0.1", std::uint16_t port = 0) { tcp_.start(host, port); }
    void stop() { tcp_.stop(); }
    std::uint16_t port() const noexcept { return tcp_.port(); }

private:
    net::TcpServer tcp_;
};

}  // namespace censorless::http
