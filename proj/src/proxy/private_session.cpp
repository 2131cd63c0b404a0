#include "censorless/proxy/private_session.hpp"

#include <atomic>
#include <thread>

#include "censorless/protocol/compression.hpp"

namespace censorless::proxy {

using namespace protocol;

std::uint64_t time_based_nonce() {
    auto us = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::system_clock::now().time_since_epoch());
    return static_cast<std::uint64_t>(us.count());
}

PrivateSession::PrivateSession(KeyPair client, PublicKey server, SocksAddress exit_address, FrameTransport transport,
                               SessionConfig config, std::uint64_t first_nonce)
    : client_(std::move(client)),
      server_(server),
      exit_address_(std::move(exit_address)),
      transport_(std::move(transport)),
      config_(config),
      nonces_(first_nonce) {}

Bytes PrivateSession::seal_request(const InnerMessage& msg) {
    RequestPayload payload{client_.public_key, nonces_.next(), msg};
    PrivateRequestMessage request{exit_address_, seal(encode_payload(payload), server_)};
    return encode_request(request);
}

PrivateResponseMessage PrivateSession::exchange(const InnerMessage& msg) {
    for (int attempt = 0;; ++attempt) {
        auto frame = seal_request(msg);
        Bytes reply;
        try {
            reply = transport_(frame);
        } catch (const std::exception& e) {
            throw SessionError(std::nullopt, std::string("transport: ") + e.what());
        }
        PrivateResponseMessage response;
        try {
            auto outer = decode_response_frame(reply);
            Bytes plain = outer.sealed ? protocol::open(SealedEnvelope::parse(outer.body), client_) : outer.body;
            response = decode_response(plain);
        } catch (const std::exception& e) {
            throw SessionError(std::nullopt, std::string("bad response: ") + e.what());
        }
        {
            std::lock_guard lock(state_mutex_);
            ++frames_;
            if (auto* d = std::get_if<DataMessage>(&msg); d && d->is_keepalive()) ++keepalives_;
        }
        auto* err = std::get_if<ErrorResponse>(&response);
        if (err && err->code == ErrorCode::replay && attempt == 0) {
            // Our counter fell behind what the server last accepted for this
            // key (for instance after a restart with a copied key).
            nonces_.advance_to(std::max(nonces_.peek(), time_based_nonce()) + 1);
            continue;
        }
        return response;
    }
}

void PrivateSession::deliver(const PrivateResponseMessage& msg, std::optional<PrivateResponseMessage>& mine) {
    auto id = connection_of(msg).id;
    std::shared_ptr<Inbox> inbox;
    {
        std::lock_guard lock(state_mutex_);
        if (auto it = inboxes_.find(id); it != inboxes_.end()) inbox = it->second;
    }
    if (!inbox) {
        mine = msg;
        return;
    }
    {
        std::lock_guard lock(inbox->mutex);
        inbox->queue.push_back(msg);
    }
    inbox->cv.notify_all();
}

std::optional<PrivateResponseMessage> PrivateSession::exchange_routed(const InnerMessage& msg) {
    std::lock_guard send_lock(send_mutex_);
    auto response = exchange(msg);
    std::optional<PrivateResponseMessage> mine;
    // Routing happens under the send lock so each inbox sees responses in
    // the order the exit server produced them.
    deliver(response, mine);
    return mine;
}

ConnectionId PrivateSession::open(const SocksAddress& target) {
    auto reply = exchange_routed(StartConnection{target});
    if (!reply) throw SessionError(ErrorCode::internal, "start response was routed elsewhere");
    if (auto* ok = std::get_if<ConnectionEstablished>(&*reply)) {
        if (!verify_connection_id(ok->connection, server_))
            throw SessionError(ErrorCode::auth, "connection id not signed by the exit server");
        return ok->connection;
    }
    if (auto* err = std::get_if<ErrorResponse>(&*reply)) throw SessionError(err->code, err->message);
    throw SessionError(ErrorCode::internal, "unexpected response to start");
}

void PrivateSession::pump(net::TcpStream& client, const ConnectionId& conn) {
    auto inbox = std::make_shared<Inbox>();
    {
        std::lock_guard lock(state_mutex_);
        inboxes_[conn.id] = inbox;
    }

    std::atomic<bool> client_eof{false};
    std::atomic<bool> failed{false};
    auto wake = [&] {
        {
            std::lock_guard lock(inbox->mutex);
        }
        inbox->cv.notify_all();
    };

    std::thread reader([&] {
        Bytes buf(config_.chunk_size);
        try {
            for (;;) {
                auto n = client.read_some(buf);
                if (n == 0) break;
                auto packed = compress(ByteView(buf.data(), n));
                DataMessage msg;
                msg.connection = conn;
                msg.compressed = packed.compressed;
                msg.original_length = static_cast<std::uint32_t>(n);
                msg.compressed_length = static_cast<std::uint32_t>(packed.data.size());
                msg.data = std::move(packed.data);
                if (auto stray = exchange_routed(msg)) {
                    std::lock_guard lock(inbox->mutex);
                    inbox->queue.push_back(*stray);
                }
                wake();
            }
        } catch (const std::exception&) {
            failed = !client_eof.load();
        }
        client_eof = true;
        wake();
    });

    bool target_closed = false;
    auto delay = config_.poll_min;
    auto ceiling = std::min(config_.poll_max, config_.keepalive_interval);
    auto last_data = std::chrono::steady_clock::now();
    auto last_sent = std::chrono::steady_clock::now();
    int transport_failures = 0;

    while (!target_closed && !failed) {
        std::deque<PrivateResponseMessage> batch;
        {
            std::unique_lock lock(inbox->mutex);
            inbox->cv.wait_for(lock, delay, [&] { return !inbox->queue.empty() || failed; });
            batch.swap(inbox->queue);
        }
        bool got_data = false;
        try {
            for (auto& msg : batch) {
                if (auto* d = std::get_if<DataResponse>(&msg)) {
                    if (d->original_length == 0) continue;
                    auto plain = d->compressed ? decompress(d->data, d->original_length) : d->data;
                    client.write_all(plain);
                    got_data = true;
                } else if (std::holds_alternative<ConnectionClose>(msg)) {
                    target_closed = true;
                } else if (std::holds_alternative<ErrorResponse>(msg)) {
                    failed = true;
                }
            }
        } catch (const std::exception&) {
            failed = true;
        }
        if (target_closed || failed) break;

        auto now = std::chrono::steady_clock::now();
        if (got_data) {
            last_data = now;
            delay = config_.poll_min;
            continue;
        }
        if (client_eof && now - last_data >= config_.linger) break;
        if (!batch.empty()) continue;

        // Nothing arrived within the wait: poll, which doubles as keepalive.
        if (now - last_sent >= delay) {
            DataMessage keepalive;
            keepalive.connection = conn;
            try {
                if (auto stray = exchange_routed(keepalive)) {
                    std::lock_guard lock(inbox->mutex);
                    inbox->queue.push_back(*stray);
                }
                transport_failures = 0;
            } catch (const SessionError&) {
                if (++transport_failures >= 5) failed = true;
            }
            last_sent = std::chrono::steady_clock::now();
            delay = std::min(delay * 2, ceiling);
        }
    }

    if (target_closed) client.shutdown_write();
    client.shutdown_both();
    reader.join();
    {
        std::lock_guard lock(state_mutex_);
        inboxes_.erase(conn.id);
    }
    if (!target_closed) {
        try {
            exchange_routed(CloseConnection{conn});
        } catch (const SessionError&) {
        }
    }
}

std::uint64_t PrivateSession::frames_sent() const {
    std::lock_guard lock(state_mutex_);
    return frames_;
}

std::uint64_t PrivateSession::keepalives_sent() const {
    std::lock_guard lock(state_mutex_);
    return keepalives_;
}

}  // namespace censorless::proxy
