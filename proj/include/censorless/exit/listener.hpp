#pragma once

#include <condition_variable>
#include <mutex>
#include <string>
#include <thread>

#include "censorless/exit/exit_server.hpp"
#include "censorless/net/tcp_server.hpp"

namespace censorless::exit {

/// Stream front of the exit server. Each TCP connection carries a sequence
/// of request frames; every frame is answered with exactly one response
/// frame. A background task runs expire() once per second.
class ExitListener {
public:
    explicit ExitListener(ExitServer& server);
    ~ExitListener() { stop(); }

    void start(const std::string& host, std::uint16_t port);
    void stop();
    std::uint16_t port() const noexcept { return tcp_.port(); }

private:
    void serve(net::TcpStream& stream);

    ExitServer& server_;
    net::TcpServer tcp_;
    std::thread janitor_;
    std::mutex mutex_;
    std::condition_variable wake_;
    bool stopping_ = false;
};

/// Reads one complete request frame; nullopt on clean end of stream.
/// Throws protocol::DecodeError for frames that can never be valid.
std::optional<Bytes> read_request_frame(net::Stream& stream);

/// Reads one complete response frame.
Bytes read_response_frame(net::Stream& stream);

}  // namespace censorless::exit
