#include "censorless/exit/listener.hpp"

namespace censorless::exit {

using namespace protocol;

namespace {

template <typename LengthFn>
std::optional<Bytes> read_frame(net::Stream& stream, LengthFn length_of) {
    Bytes frame;
    std::uint8_t buf[4096];
    std::optional<std::size_t> total;
    for (;;) {
        if (!total) total = length_of(ByteView(frame));
        if (total && frame.size() >= *total) return frame;
        std::size_t want = sizeof buf;
        if (total) want = std::min(want, *total - frame.size());
        else want = 1;  // header is parsed incrementally; never overread
        auto n = stream.read_some(std::span<std::uint8_t>(buf, want));
        if (n == 0) {
            if (frame.empty()) return std::nullopt;
            throw net::NetError("stream ended inside a frame");
        }
        frame.insert(frame.end(), buf, buf + n);
    }
}

}  // namespace

std::optional<Bytes> read_request_frame(net::Stream& stream) {
    return read_frame(stream, [](ByteView b) { return request_frame_length(b); });
}

Bytes read_response_frame(net::Stream& stream) {
    auto frame = read_frame(stream, [](ByteView b) { return response_frame_length(b); });
    if (!frame) throw net::NetError("stream closed before a response frame");
    return std::move(*frame);
}

ExitListener::ExitListener(ExitServer& server)
    : server_(server), tcp_([this](net::TcpStream& s) { serve(s); }) {}

void ExitListener::start(const std::string& host, std::uint16_t port) {
    tcp_.start(host, port);
    {
        std::lock_guard lock(mutex_);
        stopping_ = false;
    }
    janitor_ = std::thread([this] {
        std::unique_lock lock(mutex_);
        while (!wake_.wait_for(lock, std::chrono::seconds(1), [this] { return stopping_; })) {
            lock.unlock();
            server_.expire();
            lock.lock();
        }
    });
}

void ExitListener::stop() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    if (janitor_.joinable()) janitor_.join();
    tcp_.stop();
}

void ExitListener::serve(net::TcpStream& stream) {
    stream.set_timeout(std::chrono::seconds(60));
    for (;;) {
        std::optional<Bytes> frame;
        try {
            frame = read_request_frame(stream);
        } catch (const DecodeError& e) {
            ErrorResponse err;
            err.code = ErrorCode::malformed;
            err.message = e.what();
            stream.write_all(encode_response_frame(ResponseFrame{false, encode_response(err)}));
            return;
        }
        if (!frame) return;
        stream.write_all(server_.handle_frame(*frame));
    }
}

}  // namespace censorless::exit
