#include "censorless/exit/exit_server.hpp"

#include <algorithm>

#include "censorless/protocol/compression.hpp"

namespace censorless::exit {

using namespace protocol;

struct ExitServer::Connection {
    std::uint64_t id = 0;
    PublicKey owner{};
    ConnectionId signed_id;
    net::TcpStream stream;
    Clock::time_point created_at;
    Clock::time_point last_activity;
    std::mutex write_mutex;
    std::thread reader;
    bool closing = false;        // guarded by ExitServer::mutex_
    bool target_closed = false;  // guarded by ExitServer::mutex_
};

namespace {

std::size_t message_bytes(const PrivateResponseMessage& msg) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DataResponse>) {
                return 90 + m.data.size();
            } else if constexpr (std::is_same_v<T, ConnectionEstablished>) {
                return 73;
            } else {
                return 90 + m.message.size();
            }
        },
        msg);
}

DataResponse data_response(const ConnectionId& conn, Bytes bytes) {
    DataResponse r;
    r.connection = conn;
    r.original_length = static_cast<std::uint32_t>(bytes.size());
    r.actual_length = r.original_length;
    r.data = std::move(bytes);
    return r;
}

}  // namespace

net::Resolver make_resolver(std::map<std::string, net::IpAddress> overrides) {
    return [overrides = std::move(overrides)](const std::string& host) -> std::vector<net::IpAddress> {
        if (auto it = overrides.find(host); it != overrides.end()) return {it->second};
        return net::resolve(host);
    };
}

ExitServer::ExitServer(KeyPair keys, ExitConfig config, net::SsrfPolicy policy, net::Resolver resolver,
                       Dialer dialer, Clock& clock)
    : keys_(std::move(keys)),
      config_(config),
      policy_(std::move(policy)),
      resolver_(std::move(resolver)),
      dialer_(std::move(dialer)),
      clock_(clock) {
    if (!dialer_) {
        dialer_ = [](const net::IpAddress& ip, std::uint16_t port, std::chrono::milliseconds timeout) {
            return net::TcpStream::connect(ip, port, timeout);
        };
    }
}

ExitServer::~ExitServer() { shutdown(); }

void ExitServer::shutdown() {
    std::vector<std::shared_ptr<Connection>> all;
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
        for (auto& [id, c] : connections_) {
            c->closing = true;
            all.push_back(c);
        }
        connections_.clear();
    }
    changed_.notify_all();
    for (auto& c : all) {
        c->stream.shutdown_both();
        if (c->reader.joinable()) c->reader.join();
    }
}

Bytes ExitServer::handle_frame(ByteView frame) {
    {
        std::lock_guard lock(mutex_);
        ++stats_.frames;
    }
    auto plain_error = [this](ErrorCode code, std::string message) {
        ++errors_;
        ErrorResponse e;
        e.code = code;
        e.message = std::move(message);
        return encode_response_frame(ResponseFrame{false, encode_response(e)});
    };

    PrivateRequestMessage request;
    try {
        request = decode_request(frame);
    } catch (const DecodeError& e) {
        return plain_error(ErrorCode::malformed, e.what());
    }
    Bytes plaintext;
    try {
        if (request.encrypted_payload.recipient_hint != keys_.public_key)
            return plain_error(ErrorCode::decrypt_failed, "payload is not addressed to this server");
        plaintext = open(request.encrypted_payload, keys_);
    } catch (const CryptoError& e) {
        return plain_error(ErrorCode::decrypt_failed, e.what());
    }
    RequestPayload payload;
    try {
        payload = decode_payload(plaintext);
    } catch (const DecodeError& e) {
        return plain_error(ErrorCode::malformed, e.what());
    }

    auto response = handle_payload(payload);
    try {
        auto sealed = seal(encode_response(response), payload.client_public_key);
        return encode_response_frame(ResponseFrame{true, sealed.serialize()});
    } catch (const CryptoError& e) {
        return plain_error(ErrorCode::auth, std::string("cannot seal to client key: ") + e.what());
    }
}

PrivateResponseMessage ExitServer::handle_payload(const RequestPayload& payload) {
    return std::visit(
        [&](const auto& msg) -> PrivateResponseMessage {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, StartConnection>) {
                return start(payload, msg);
            } else if constexpr (std::is_same_v<T, DataMessage>) {
                return data(payload, msg);
            } else {
                return close(payload, msg);
            }
        },
        payload.message);
}

PrivateResponseMessage ExitServer::error(const ConnectionId& conn, ErrorCode code, std::string message) {
    // Callers may hold mutex_ here.
    ++errors_;
    ErrorResponse e;
    e.connection = conn;
    e.code = code;
    e.message = std::move(message);
    return e;
}

PrivateResponseMessage ExitServer::start(const RequestPayload& payload, const StartConnection& msg) {
    if (!nonces_.accept(payload.client_public_key, payload.nonce))
        return error({}, ErrorCode::replay, "stale or replayed nonce");

    auto decision = policy_.check_host(msg.target.host(), resolver_);
    if (!decision.allowed()) {
        return error({}, ErrorCode::forbidden_target,
                     "target " + msg.target.host() + " denied: " + std::string(net::to_string(*decision.denied)));
    }

    net::TcpStream stream;
    try {
        // Connect to the address that was checked; re-resolving here would
        // reopen the door to DNS rebinding.
        stream = dialer_(*decision.address, msg.target.port, config_.connect_timeout);
    } catch (const net::NetError& e) {
        return error({}, ErrorCode::connect_failed, e.what());
    }

    stream.set_send_timeout(config_.connect_timeout);
    auto conn = std::make_shared<Connection>();
    conn->owner = payload.client_public_key;
    conn->stream = std::move(stream);
    conn->created_at = conn->last_activity = clock_.now();
    {
        std::lock_guard lock(mutex_);
        if (stopping_) return error({}, ErrorCode::internal, "server is shutting down");
        conn->id = next_id_++;
        conn->signed_id = sign_connection_id(conn->id, keys_.secret_key);
        buffer_locked(conn->owner);
        connections_[conn->id] = conn;
        conn->reader = std::thread([this, conn] { reader_loop(conn); });
    }
    return ConnectionEstablished{conn->signed_id};
}

PrivateResponseMessage ExitServer::data(const RequestPayload& payload, const DataMessage& msg) {
    if (!verify_connection_id(msg.connection, keys_.public_key))
        return error(msg.connection, ErrorCode::auth, "connection signature does not verify");
    if (!nonces_.accept(payload.client_public_key, payload.nonce))
        return error(msg.connection, ErrorCode::replay, "stale or replayed nonce");

    std::shared_ptr<Connection> conn;
    bool target_closed = false;
    {
        std::lock_guard lock(mutex_);
        auto it = connections_.find(msg.connection.id);
        if (it == connections_.end()) return error(msg.connection, ErrorCode::no_conn, "unknown connection");
        conn = it->second;
        if (conn->owner != payload.client_public_key)
            return error(msg.connection, ErrorCode::auth, "connection belongs to another client");
        conn->last_activity = clock_.now();
        target_closed = conn->target_closed;
    }

    if (!msg.is_keepalive() && !target_closed) {
        Bytes plain;
        try {
            plain = msg.compressed ? decompress(msg.data, msg.original_length) : msg.data;
        } catch (const CompressionError& e) {
            return error(msg.connection, ErrorCode::malformed, e.what());
        }
        try {
            std::lock_guard write_lock(conn->write_mutex);
            conn->stream.write_all(plain);
        } catch (const net::NetError& e) {
            // The reader sees the same failure and queues the close.
            conn->stream.shutdown_both();
        }
    }

    std::unique_lock lock(mutex_);
    auto& buffer = buffer_locked(payload.client_public_key);
    changed_.wait_for(lock, config_.poll_wait, [&] { return !buffer.entries.empty() || stopping_; });
    if (auto next = pop_locked(payload.client_public_key, true)) return std::move(*next);
    return data_response(msg.connection, {});
}

PrivateResponseMessage ExitServer::close(const RequestPayload& payload, const CloseConnection& msg) {
    if (!verify_connection_id(msg.connection, keys_.public_key))
        return error(msg.connection, ErrorCode::auth, "connection signature does not verify");
    if (!nonces_.accept(payload.client_public_key, payload.nonce))
        return error(msg.connection, ErrorCode::replay, "stale or replayed nonce");

    std::shared_ptr<Connection> conn;
    {
        std::lock_guard lock(mutex_);
        auto it = connections_.find(msg.connection.id);
        if (it == connections_.end()) return error(msg.connection, ErrorCode::no_conn, "unknown connection");
        if (it->second->owner != payload.client_public_key)
            return error(msg.connection, ErrorCode::auth, "connection belongs to another client");
        conn = it->second;
        connections_.erase(it);
        conn->closing = true;
        // Output still queued for this connection is of no use any more.
        auto& buffer = buffer_locked(conn->owner);
        std::erase_if(buffer.entries, [&](const Entry& e) {
            if (connection_of(e.msg).id != conn->id) return false;
            buffer.total_bytes -= e.bytes;
            return true;
        });
    }
    changed_.notify_all();
    retire(conn);
    return ConnectionClose{msg.connection, "closed by client"};
}

void ExitServer::retire(std::shared_ptr<Connection> conn) {
    conn->stream.shutdown_both();
    if (conn->reader.joinable() && conn->reader.get_id() != std::this_thread::get_id()) conn->reader.join();
}

void ExitServer::reader_loop(std::shared_ptr<Connection> conn) {
    Bytes chunk(config_.read_chunk);
    std::string reason = "closed by target";
    for (;;) {
        {
            // Backpressure: hold off reading while the client's buffer is full.
            std::unique_lock lock(mutex_);
            changed_.wait(lock, [&] {
                if (stopping_ || conn->closing) return true;
                auto& b = buffers_[conn->owner];
                bool bytes_ok = b.total_bytes + config_.read_chunk + 90 <= config_.max_buffer_bytes;
                bool count_ok = config_.max_buffer_messages == 0 || b.entries.size() < config_.max_buffer_messages;
                return bytes_ok && count_ok;
            });
            if (stopping_ || conn->closing) return;
        }
        std::size_t n = 0;
        try {
            n = conn->stream.read_some(chunk);
        } catch (const net::NetError& e) {
            reason = e.what();
        }
        std::lock_guard lock(mutex_);
        if (stopping_ || conn->closing) return;
        if (n == 0) {
            conn->target_closed = true;
            enqueue_locked(conn->owner, ConnectionClose{conn->signed_id, reason});
            changed_.notify_all();
            return;
        }
        enqueue_locked(conn->owner, data_response(conn->signed_id, Bytes(chunk.begin(), chunk.begin() + n)));
        changed_.notify_all();
    }
}

ExitServer::ClientBuffer& ExitServer::buffer_locked(const PublicKey& client) {
    auto [it, inserted] = buffers_.try_emplace(client);
    if (inserted) it->second.last_drain = clock_.now();
    return it->second;
}

void ExitServer::enqueue(const PublicKey& client, PrivateResponseMessage msg) {
    {
        std::lock_guard lock(mutex_);
        enqueue_locked(client, std::move(msg));
    }
    changed_.notify_all();
}

void ExitServer::enqueue_locked(const PublicKey& client, PrivateResponseMessage msg) {
    auto& b = buffer_locked(client);
    auto size = message_bytes(msg);
    auto over = [&] {
        bool bytes_over = b.total_bytes + size > config_.max_buffer_bytes;
        bool count_over = config_.max_buffer_messages != 0 && b.entries.size() + 1 > config_.max_buffer_messages;
        return bytes_over || count_over;
    };
    while (!b.entries.empty() && over()) {
        b.total_bytes -= b.entries.front().bytes;
        b.entries.pop_front();
        ++b.dropped;
        ++stats_.dropped_messages;
    }
    if (size > config_.max_buffer_bytes) {
        ++b.dropped;
        ++stats_.dropped_messages;
        return;
    }
    b.total_bytes += size;
    b.entries.push_back(Entry{std::move(msg), size, clock_.now()});
}

std::optional<PrivateResponseMessage> ExitServer::pop_locked(const PublicKey& client, bool coalesce) {
    auto it = buffers_.find(client);
    if (it == buffers_.end()) return std::nullopt;
    auto& b = it->second;
    b.last_drain = clock_.now();
    if (b.entries.empty()) return std::nullopt;
    auto head = std::move(b.entries.front());
    b.entries.pop_front();
    b.total_bytes -= head.bytes;
    auto* data = std::get_if<DataResponse>(&head.msg);
    if (!data) return std::move(head.msg);

    if (coalesce) {
        // Merge directly following output of the same connection so one poll
        // can carry up to a full message worth of bytes.
        while (!b.entries.empty()) {
            auto* next = std::get_if<DataResponse>(&b.entries.front().msg);
            if (!next || next->connection.id != data->connection.id ||
                data->data.size() + next->data.size() > kMaxDataLength)
                break;
            data->data.insert(data->data.end(), next->data.begin(), next->data.end());
            b.total_bytes -= b.entries.front().bytes;
            b.entries.pop_front();
        }
        changed_.notify_all();
    }
    auto packed = compress(data->data);
    data->original_length = static_cast<std::uint32_t>(data->data.size());
    data->compressed = packed.compressed;
    data->data = std::move(packed.data);
    data->actual_length = static_cast<std::uint32_t>(data->data.size());
    return std::move(head.msg);
}

std::optional<PrivateResponseMessage> ExitServer::drain_buffer(const PublicKey& client) {
    std::optional<PrivateResponseMessage> out;
    {
        std::lock_guard lock(mutex_);
        out = pop_locked(client, false);
    }
    changed_.notify_all();
    return out;
}

ExpireResult ExitServer::expire(Clock::time_point now) {
    ExpireResult result;
    std::vector<std::shared_ptr<Connection>> done;
    {
        std::lock_guard lock(mutex_);
        for (auto it = connections_.begin(); it != connections_.end();) {
            auto& c = it->second;
            bool idle = now - c->last_activity > config_.idle_timeout;
            if (!idle && !c->target_closed) {
                ++it;
                continue;
            }
            if (idle && !c->target_closed) {
                enqueue_locked(c->owner, ConnectionClose{c->signed_id, "idle timeout"});
                ++result.closed_connections;
            }
            c->closing = true;
            done.push_back(c);
            it = connections_.erase(it);
        }
        for (auto it = buffers_.begin(); it != buffers_.end();) {
            auto& b = it->second;
            bool stale = now - b.last_drain > config_.buffer_timeout;
            if (stale && !b.entries.empty()) {
                b.dropped += b.entries.size();
                stats_.dropped_messages += b.entries.size();
                b.entries.clear();
                b.total_bytes = 0;
                ++result.dropped_buffers;
            }
            bool owns_connection = std::any_of(connections_.begin(), connections_.end(),
                                               [&](const auto& kv) { return kv.second->owner == it->first; });
            if (stale && !owns_connection) {
                it = buffers_.erase(it);
            } else {
                ++it;
            }
        }
    }
    changed_.notify_all();
    for (auto& c : done) retire(c);
    return result;
}

std::size_t ExitServer::buffered_bytes(const PublicKey& client) const {
    std::lock_guard lock(mutex_);
    auto it = buffers_.find(client);
    return it == buffers_.end() ? 0 : it->second.total_bytes;
}

std::size_t ExitServer::buffered_messages(const PublicKey& client) const {
    std::lock_guard lock(mutex_);
    auto it = buffers_.find(client);
    return it == buffers_.end() ? 0 : it->second.entries.size();
}

std::uint64_t ExitServer::dropped_messages(const PublicKey& client) const {
    std::lock_guard lock(mutex_);
    auto it = buffers_.find(client);
    return it == buffers_.end() ? 0 : it->second.dropped;
}

ExitStats ExitServer::stats() const {
    std::lock_guard lock(mutex_);
    auto s = stats_;
    s.errors = errors_.load();
    s.open_connections = connections_.size();
    return s;
}

}  // namespace censorless::exit
