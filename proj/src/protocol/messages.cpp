#include "censorless/protocol/messages.hpp"

#include <arpa/inet.h>

#include <algorithm>

namespace censorless::protocol {

namespace {

class Reader {
public:
    Reader(ByteView in, std::size_t offset = 0) : in_(in), pos_(offset) {}

    void need(std::size_t n, const char* what) const {
        if (in_.size() - pos_ < n) throw DecodeError(DecodeErrc::truncated, std::string("truncated ") + what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return in_[pos_++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        auto v = load_u16(in_.subspan(pos_, 2));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        auto v = load_u32(in_.subspan(pos_, 4));
        pos_ += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        auto v = load_u64(in_.subspan(pos_, 8));
        pos_ += 8;
        return v;
    }
    ByteView take(std::size_t n, const char* what) {
        need(n, what);
        auto v = in_.subspan(pos_, n);
        pos_ += n;
        return v;
    }
    template <std::size_t N>
    std::array<std::uint8_t, N> fixed(const char* what) {
        std::array<std::uint8_t, N> out{};
        auto v = take(N, what);
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }
    void finish() const {
        if (pos_ != in_.size()) throw DecodeError(DecodeErrc::trailing_bytes, "trailing bytes after message");
    }
    std::size_t& pos() { return pos_; }
    ByteView input() const { return in_; }

private:
    ByteView in_;
    std::size_t pos_;
};

void put_connection(Bytes& out, const ConnectionId& c) {
    put_u64(out, c.id);
    put_bytes(out, c.signature);
}

ConnectionId read_connection(Reader& r) {
    ConnectionId c;
    c.id = r.u64("connection id");
    c.signature = r.fixed<64>("connection signature");
    return c;
}

void put_string(Bytes& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    put_bytes(out, to_bytes(s));
}

std::string read_string(Reader& r) {
    auto len = r.u32("message length");
    if (len > kMaxResponseLength) throw DecodeError(DecodeErrc::length_overflow, "message length overflow");
    auto v = r.take(len, "message");
    return std::string(v.begin(), v.end());
}

// Shared shape for data bodies; `declared` is compressed_length or actual_length.
void check_data_lengths(bool compressed, std::uint32_t original, std::uint32_t declared) {
    if (original > kMaxDataLength || declared > kMaxDataLength)
        throw DecodeError(DecodeErrc::length_overflow, "data length overflow");
    if (compressed ? declared > original : declared != original)
        throw DecodeError(DecodeErrc::invalid_field, "inconsistent data lengths");
}

bool read_flag(Reader& r) {
    auto f = r.u8("compression flag");
    if (f > 1) throw DecodeError(DecodeErrc::invalid_field, "compression flag must be 0 or 1");
    return f == 1;
}

}  // namespace

SocksAddress SocksAddress::from_host(std::string_view host, std::uint16_t port) {
    SocksAddress a;
    a.port = port;
    std::string h(host);
    if (h.size() > 2 && h.front() == '[' && h.back() == ']') h = h.substr(1, h.size() - 2);
    std::array<std::uint8_t, 16> buf{};
    if (inet_pton(AF_INET, h.c_str(), buf.data()) == 1) {
        a.type = AddressType::ipv4;
        a.addr.assign(buf.begin(), buf.begin() + 4);
    } else if (inet_pton(AF_INET6, h.c_str(), buf.data()) == 1) {
        a.type = AddressType::ipv6;
        a.addr.assign(buf.begin(), buf.end());
    } else {
        if (h.empty() || h.size() > 255) throw std::invalid_argument("domain name must be 1..255 bytes");
        a.type = AddressType::domain;
        a.addr = to_bytes(h);
    }
    return a;
}

std::string SocksAddress::host() const {
    char buf[INET6_ADDRSTRLEN] = {};
    switch (type) {
        case AddressType::ipv4:
            if (addr.size() == 4 && inet_ntop(AF_INET, addr.data(), buf, sizeof buf)) return buf;
            break;
        case AddressType::ipv6:
            if (addr.size() == 16 && inet_ntop(AF_INET6, addr.data(), buf, sizeof buf)) return buf;
            break;
        case AddressType::domain:
            return censorless::to_string(addr);
    }
    return {};
}

void encode_address(Bytes& out, const SocksAddress& address) {
    put_u8(out, static_cast<std::uint8_t>(address.type));
    switch (address.type) {
        case AddressType::ipv4:
            if (address.addr.size() != 4) throw std::invalid_argument("IPv4 address must be 4 bytes");
            break;
        case AddressType::ipv6:
            if (address.addr.size() != 16) throw std::invalid_argument("IPv6 address must be 16 bytes");
            break;
        case AddressType::domain:
            if (address.addr.empty() || address.addr.size() > 255)
                throw std::invalid_argument("domain name must be 1..255 bytes");
            put_u8(out, static_cast<std::uint8_t>(address.addr.size()));
            break;
    }
    put_bytes(out, address.addr);
    put_u16(out, address.port);
}

SocksAddress decode_address(ByteView in, std::size_t& offset) {
    Reader r(in, offset);
    SocksAddress a;
    auto atyp = r.u8("address type");
    switch (atyp) {
        case 1: {
            a.type = AddressType::ipv4;
            auto v = r.take(4, "IPv4 address");
            a.addr.assign(v.begin(), v.end());
            break;
        }
        case 3: {
            a.type = AddressType::domain;
            auto len = r.u8("domain length");
            if (len == 0) throw DecodeError(DecodeErrc::invalid_field, "empty domain name");
            auto v = r.take(len, "domain");
            a.addr.assign(v.begin(), v.end());
            break;
        }
        case 4: {
            a.type = AddressType::ipv6;
            auto v = r.take(16, "IPv6 address");
            a.addr.assign(v.begin(), v.end());
            break;
        }
        default:
            throw DecodeError(DecodeErrc::unknown_type, "unknown address type");
    }
    a.port = r.u16("port");
    offset = r.pos();
    return a;
}

Bytes connection_id_bytes(std::uint64_t id) {
    Bytes out;
    put_u64(out, id);
    return out;
}

ConnectionId sign_connection_id(std::uint64_t id, const SecretKey& server_secret) {
    return ConnectionId{id, sign(connection_id_bytes(id), server_secret)};
}

bool verify_connection_id(const ConnectionId& conn, const PublicKey& server_public) {
    return verify(connection_id_bytes(conn.id), conn.signature, server_public);
}

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::replay: return "REPLAY";
        case ErrorCode::auth: return "AUTH";
        case ErrorCode::forbidden_target: return "FORBIDDEN_TARGET";
        case ErrorCode::no_conn: return "NO_CONN";
        case ErrorCode::connect_failed: return "CONNECT_FAILED";
        case ErrorCode::malformed: return "MALFORMED";
        case ErrorCode::decrypt_failed: return "DECRYPT_FAILED";
        case ErrorCode::internal: return "INTERNAL";
    }
    return "UNKNOWN";
}

const ConnectionId& connection_of(const PrivateResponseMessage& msg) {
    return std::visit([](const auto& m) -> const ConnectionId& { return m.connection; }, msg);
}

Bytes encode_payload(const RequestPayload& payload) {
    Bytes out;
    put_bytes(out, payload.client_public_key);
    put_u64(out, payload.nonce);
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, StartConnection>) {
                put_u8(out, 1);
                encode_address(out, m.target);
            } else if constexpr (std::is_same_v<T, DataMessage>) {
                if (m.data.size() != m.compressed_length)
                    throw std::invalid_argument("compressed_length must equal carried data size");
                put_u8(out, 2);
                put_connection(out, m.connection);
                put_u8(out, m.compressed ? 1 : 0);
                put_u32(out, m.original_length);
                put_u32(out, m.compressed_length);
                put_bytes(out, m.data);
            } else {
                put_u8(out, 3);
                put_connection(out, m.connection);
            }
        },
        payload.message);
    return out;
}

RequestPayload decode_payload(ByteView bytes) {
    Reader r(bytes);
    RequestPayload p;
    p.client_public_key = r.fixed<32>("client key");
    p.nonce = r.u64("nonce");
    auto type = r.u8("message type");
    switch (type) {
        case 1: {
            StartConnection s;
            s.target = decode_address(bytes, r.pos());
            p.message = std::move(s);
            break;
        }
        case 2: {
            DataMessage d;
            d.connection = read_connection(r);
            d.compressed = read_flag(r);
            d.original_length = r.u32("original length");
            d.compressed_length = r.u32("compressed length");
            check_data_lengths(d.compressed, d.original_length, d.compressed_length);
            auto v = r.take(d.compressed_length, "data");
            d.data.assign(v.begin(), v.end());
            p.message = std::move(d);
            break;
        }
        case 3:
            p.message = CloseConnection{read_connection(r)};
            break;
        default:
            throw DecodeError(DecodeErrc::unknown_type, "unknown request message type");
    }
    r.finish();
    return p;
}

Bytes encode_request(const PrivateRequestMessage& msg) {
    Bytes out;
    encode_address(out, msg.server_address);
    put_u32(out, msg.payload_length());
    put_bytes(out, msg.encrypted_payload.serialize());
    return out;
}

PrivateRequestMessage decode_request(ByteView bytes) {
    PrivateRequestMessage msg;
    std::size_t offset = 0;
    msg.server_address = decode_address(bytes, offset);
    Reader r(bytes, offset);
    auto len = r.u32("payload length");
    if (len > kMaxPayloadLength) throw DecodeError(DecodeErrc::length_overflow, "payload length overflow");
    auto payload = r.take(len, "payload");
    r.finish();
    try {
        msg.encrypted_payload = SealedEnvelope::parse(payload);
    } catch (const CryptoError&) {
        throw DecodeError(DecodeErrc::truncated, "payload shorter than an envelope");
    }
    return msg;
}

std::optional<std::size_t> request_frame_length(ByteView prefix) {
    try {
        std::size_t offset = 0;
        decode_address(prefix, offset);
        Reader r(prefix, offset);
        auto len = r.u32("payload length");
        if (len > kMaxPayloadLength) throw DecodeError(DecodeErrc::length_overflow, "payload length overflow");
        return r.pos() + len;
    } catch (const DecodeError& e) {
        if (e.code() == DecodeErrc::truncated) return std::nullopt;
        throw;
    }
}

Bytes encode_response(const PrivateResponseMessage& msg) {
    Bytes out;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ConnectionEstablished>) {
                put_u8(out, 1);
                put_connection(out, m.connection);
            } else if constexpr (std::is_same_v<T, DataResponse>) {
                if (m.data.size() != m.actual_length)
                    throw std::invalid_argument("actual_length must equal carried data size");
                put_u8(out, 2);
                put_connection(out, m.connection);
                put_u8(out, m.compressed ? 1 : 0);
                put_u32(out, m.original_length);
                put_u32(out, m.actual_length);
                put_bytes(out, m.data);
            } else if constexpr (std::is_same_v<T, ConnectionClose>) {
                put_u8(out, 3);
                put_connection(out, m.connection);
                put_string(out, m.message);
            } else {
                put_u8(out, 4);
                put_connection(out, m.connection);
                put_u16(out, static_cast<std::uint16_t>(m.code));
                put_string(out, m.message);
            }
        },
        msg);
    return out;
}

PrivateResponseMessage decode_response(ByteView bytes) {
    Reader r(bytes);
    auto type = r.u8("response type");
    PrivateResponseMessage out;
    switch (type) {
        case 1:
            out = ConnectionEstablished{read_connection(r)};
            break;
        case 2: {
            DataResponse d;
            d.connection = read_connection(r);
            d.compressed = read_flag(r);
            d.original_length = r.u32("original length");
            d.actual_length = r.u32("actual length");
            check_data_lengths(d.compressed, d.original_length, d.actual_length);
            auto v = r.take(d.actual_length, "data");
            d.data.assign(v.begin(), v.end());
            out = std::move(d);
            break;
        }
        case 3: {
            ConnectionClose c;
            c.connection = read_connection(r);
            c.message = read_string(r);
            out = std::move(c);
            break;
        }
        case 4: {
            ErrorResponse e;
            e.connection = read_connection(r);
            auto code = r.u16("error code");
            if (code < 1 || code > static_cast<std::uint16_t>(ErrorCode::internal))
                throw DecodeError(DecodeErrc::invalid_field, "unknown error code");
            e.code = static_cast<ErrorCode>(code);
            e.message = read_string(r);
            out = std::move(e);
            break;
        }
        default:
            throw DecodeError(DecodeErrc::unknown_type, "unknown response type");
    }
    r.finish();
    return out;
}

Bytes encode_response_frame(const ResponseFrame& frame) {
    Bytes out;
    put_u8(out, frame.sealed ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(frame.body.size()));
    put_bytes(out, frame.body);
    return out;
}

std::optional<std::size_t> response_frame_length(ByteView prefix) {
    if (prefix.size() < 5) return std::nullopt;
    if (prefix[0] > 1) throw DecodeError(DecodeErrc::unknown_type, "unknown response frame kind");
    auto len = load_u32(prefix.subspan(1, 4));
    if (len > kMaxResponseLength + 32 + seal_overhead())
        throw DecodeError(DecodeErrc::length_overflow, "response frame length overflow");
    return 5 + static_cast<std::size_t>(len);
}

ResponseFrame decode_response_frame(ByteView bytes) {
    auto total = response_frame_length(bytes);
    if (!total || bytes.size() < *total) throw DecodeError(DecodeErrc::truncated, "truncated response frame");
    if (bytes.size() > *total) throw DecodeError(DecodeErrc::trailing_bytes, "trailing bytes after response frame");
    ResponseFrame f;
    f.sealed = bytes[0] == 1;
    f.body.assign(bytes.begin() + 5, bytes.end());
    return f;
}

}  // namespace censorless::protocol
