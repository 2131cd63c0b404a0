#pragma once

// Server side of the SOCKS5 handshake (RFC 1928), no-authentication CONNECT
// only.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "censorless/net/socket.hpp"
#include "censorless/protocol/messages.hpp"

namespace censorless::proxy {

class SocksError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SocksReply : std::uint8_t {
    succeeded = 0x00,
    general_failure = 0x01,
    not_allowed = 0x02,
    network_unreachable = 0x03,
    host_unreachable = 0x04,
    connection_refused = 0x05,
    command_not_supported = 0x07,
    address_type_not_supported = 0x08,
};

/// Runs greeting and request parsing. Returns the CONNECT target; on a
/// protocol violation the matching failure reply (when one exists) is sent
/// and SocksError thrown.
protocol::SocksAddress socks_accept(net::Stream& stream);

/// Sends the final reply to a CONNECT request. The bound address is reported
/// as 0.0.0.0:0.
void socks_reply(net::Stream& stream, SocksReply reply);

/// Client side, used by tests and tools: greeting + CONNECT. Throws
/// SocksError unless the server replies success.
void socks_connect(net::Stream& stream, const std::string& host, std::uint16_t port);

}  // namespace censorless::proxy
