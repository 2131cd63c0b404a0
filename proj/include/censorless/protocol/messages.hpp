#pragma once

// Private-mode wire messages.
//
// All integers are big-endian. Layouts (see docs/private-protocol.md):
//
//   request frame   := address u32:payload_length envelope
//   address         := u8:atyp (1=IPv4 | 3=domain | 4=IPv6) addr u16:port
//   envelope        := 32:recipient_hint sealed_box
//   payload (plain) := 32:client_key u64:nonce u8:type body
//     1 start       := address
//     2 data        := connid u8:compressed u32:original u32:compressed_len data
//     3 close       := connid
//   connid          := u64:id 64:signature
//
//   response (plain):= u8:type body
//     1 established := connid
//     2 data        := connid u8:compressed u32:original u32:actual data
//     3 close       := connid u32:len message
//     4 error       := connid u16:code u32:len message
//   response frame  := u8:kind (1=sealed | 0=plain) u32:len bytes

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "censorless/bytes.hpp"
#include "censorless/protocol/crypto.hpp"

namespace censorless::protocol {

/// Largest data chunk a single Data message may carry.
inline constexpr std::uint32_t kMaxDataLength = 1u << 20;
/// Upper bound on the sealed payload of one request frame.
inline constexpr std::uint32_t kMaxPayloadLength = kMaxDataLength + 4096;
/// Upper bound on one response frame body.
inline constexpr std::uint32_t kMaxResponseLength = kMaxDataLength + 4096;

enum class DecodeErrc {
    truncated,
    unknown_type,
    length_overflow,
    invalid_field,
    trailing_bytes,
};

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    DecodeErrc code() const noexcept { return code_; }

private:
    DecodeErrc code_;
};

enum class AddressType : std::uint8_t { ipv4 = 1, domain = 3, ipv6 = 4 };

/// SOCKS5-style address. `addr` holds 4 raw bytes (IPv4), 16 raw bytes
/// (IPv6) or the domain name bytes (1..255).
struct SocksAddress {
    AddressType type = AddressType::domain;
    Bytes addr;
    std::uint16_t port = 0;

    /// Builds from a host string: IP literals become ipv4/ipv6, anything else
    /// a domain. Throws std::invalid_argument for empty or >255-byte names.
    static SocksAddress from_host(std::string_view host, std::uint16_t port);

    /// Dotted quad, RFC 5952 text, or the domain.
    std::string host() const;

    friend bool operator==(const SocksAddress&, const SocksAddress&) = default;
};

void encode_address(Bytes& out, const SocksAddress& address);
/// Reads an address at `offset`, advancing it.
SocksAddress decode_address(ByteView in, std::size_t& offset);

struct ConnectionId {
    std::uint64_t id = 0;
    Signature signature{};

    friend bool operator==(const ConnectionId&, const ConnectionId&) = default;
};

/// Bytes covered by a connection-id signature.
Bytes connection_id_bytes(std::uint64_t id);

ConnectionId sign_connection_id(std::uint64_t id, const SecretKey& server_secret);
bool verify_connection_id(const ConnectionId& conn, const PublicKey& server_public);

struct StartConnection {
    SocksAddress target;
    friend bool operator==(const StartConnection&, const StartConnection&) = default;
};

struct DataMessage {
    ConnectionId connection;
    bool compressed = false;
    std::uint32_t original_length = 0;
    std::uint32_t compressed_length = 0;
    Bytes data;

    bool is_keepalive() const noexcept { return original_length == 0; }
    friend bool operator==(const DataMessage&, const DataMessage&) = default;
};

struct CloseConnection {
    ConnectionId connection;
    friend bool operator==(const CloseConnection&, const CloseConnection&) = default;
};

using InnerMessage = std::variant<StartConnection, DataMessage, CloseConnection>;

/// Plaintext carried inside the sealed envelope of a request.
struct RequestPayload {
    PublicKey client_public_key{};
    std::uint64_t nonce = 0;
    InnerMessage message;
    friend bool operator==(const RequestPayload&, const RequestPayload&) = default;
};

struct PrivateRequestMessage {
    SocksAddress server_address;
    SealedEnvelope encrypted_payload;

    std::uint32_t payload_length() const {
        return static_cast<std::uint32_t>(32 + encrypted_payload.ciphertext.size());
    }
    friend bool operator==(const PrivateRequestMessage&, const PrivateRequestMessage&) = default;
};

enum class ErrorCode : std::uint16_t {
    replay = 1,
    auth = 2,
    forbidden_target = 3,
    no_conn = 4,
    connect_failed = 5,
    malformed = 6,
    decrypt_failed = 7,
    internal = 8,
};

std::string_view to_string(ErrorCode code);

struct ConnectionEstablished {
    ConnectionId connection;
    friend bool operator==(const ConnectionEstablished&, const ConnectionEstablished&) = default;
};

struct DataResponse {
    ConnectionId connection;
    bool compressed = false;
    std::uint32_t original_length = 0;
    std::uint32_t actual_length = 0;
    Bytes data;
    friend bool operator==(const DataResponse&, const DataResponse&) = default;
};

struct ConnectionClose {
    ConnectionId connection;
    std::string message;
    friend bool operator==(const ConnectionClose&, const ConnectionClose&) = default;
};

struct ErrorResponse {
    ConnectionId connection;
    ErrorCode code = ErrorCode::internal;
    std::string message;
    friend bool operator==(const ErrorResponse&, const ErrorResponse&) = default;
};

using PrivateResponseMessage = std::variant<ConnectionEstablished, DataResponse, ConnectionClose, ErrorResponse>;

/// Connection a response refers to.
const ConnectionId& connection_of(const PrivateResponseMessage& msg);

Bytes encode_payload(const RequestPayload& payload);
RequestPayload decode_payload(ByteView bytes);

Bytes encode_request(const PrivateRequestMessage& msg);
PrivateRequestMessage decode_request(ByteView bytes);

/// Total length of the request frame starting at `prefix` once enough header
/// bytes are available; nullopt while more bytes are needed. Throws
/// DecodeError for headers that can never become valid.
std::optional<std::size_t> request_frame_length(ByteView prefix);

Bytes encode_response(const PrivateResponseMessage& msg);
PrivateResponseMessage decode_response(ByteView bytes);

/// Outer framing of what the exit server returns. Sealed frames carry an
/// envelope addressed to the client; plain frames carry an encoded Error for
/// requests whose sender could not be identified.
struct ResponseFrame {
    bool sealed = true;
    Bytes body;
    friend bool operator==(const ResponseFrame&, const ResponseFrame&) = default;
};

Bytes encode_response_frame(const ResponseFrame& frame);
ResponseFrame decode_response_frame(ByteView bytes);
std::optional<std::size_t> response_frame_length(ByteView prefix);

}  // namespace censorless::protocol
