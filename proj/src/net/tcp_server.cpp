#include "censorless/net/tcp_server.hpp"

namespace censorless::net {

void TcpServer::start(const std::string& host, std::uint16_t port) {
    listener_ = TcpListener::bind(host, port);
    port_ = listener_.port();
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::accept_loop() {
    while (running_) {
        auto stream = listener_.accept();
        if (!stream.valid()) break;
        std::lock_guard lock(mutex_);
        reap_locked();
        if (!running_) break;
        auto& w = workers_.emplace_back();
        w.stream = std::move(stream);
        w.thread = std::thread([this, &w] {
            try {
                handler_(w.stream);
            } catch (const std::exception&) {
                // A failing connection must not take the server down.
            }
            w.stream.shutdown_both();
            w.done = true;
        });
    }
}

void TcpServer::reap_locked() {
    for (auto it = workers_.begin(); it != workers_.end();) {
        if (it->done) {
            it->thread.join();
            it = workers_.erase(it);
        } else {
            ++it;
        }
    }
}

void TcpServer::stop() {
    if (!running_.exchange(false)) {
        if (acceptor_.joinable()) acceptor_.join();
        return;
    }
    listener_.shutdown();
    if (acceptor_.joinable()) acceptor_.join();
    std::list<Worker> workers;
    {
        std::lock_guard lock(mutex_);
        for (auto& w : workers_) w.stream.shutdown_both();
        workers.splice(workers.end(), workers_);
    }
    for (auto& w : workers)
        if (w.thread.joinable()) w.thread.join();
}

}  // namespace censorless::net
