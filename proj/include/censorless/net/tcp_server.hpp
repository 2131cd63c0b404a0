#pragma once

#include <atomic>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <thread>

#include "censorless/net/socket.hpp"

namespace censorless::net {

/// Thread-per-connection acceptor. The handler owns the stream for the
/// duration of the call; stop() shuts every open stream down and joins all
/// threads.
class TcpServer {
public:
    using Handler = std::function<void(TcpStream&)>;

    explicit TcpServer(Handler handler) : handler_(std::move(handler)) {}
    ~TcpServer() { stop(); }
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Binds and starts accepting. Port 0 picks a free port.
    void start(const std::string& host, std::uint16_t port);
    void stop();
    std::uint16_t port() const noexcept { return port_; }
    bool running() const noexcept { return running_; }

private:
    struct Worker {
        TcpStream stream;
        std::thread thread;
        std::atomic<bool> done{false};
    };

    void accept_loop();
    void reap_locked();

    Handler handler_;
    TcpListener listener_;
    std::thread acceptor_;
    std::atomic<bool> running_{false};
    std::uint16_t port_ = 0;
    std::mutex mutex_;
    std::list<Worker> workers_;
};

}  // namespace censorless::net
