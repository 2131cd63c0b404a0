#include "censorless/proxy/socks5.hpp"

#include <array>

namespace censorless::proxy {

namespace {

std::uint8_t read_u8(net::Stream& s) {
    std::uint8_t b = 0;
    s.read_exact(std::span(&b, 1));
    return b;
}

}  // namespace

protocol::SocksAddress socks_accept(net::Stream& stream) {
    auto version = read_u8(stream);
    if (version != 5) throw SocksError("unsupported SOCKS version " + std::to_string(version));
    auto nmethods = read_u8(stream);
    Bytes methods(nmethods);
    if (nmethods) stream.read_exact(methods);
    bool no_auth = false;
    for (auto m : methods) no_auth |= m == 0x00;
    if (!no_auth) {
        stream.write_all(Bytes{5, 0xff});
        throw SocksError("client offers no acceptable authentication method");
    }
    stream.write_all(Bytes{5, 0x00});

    std::array<std::uint8_t, 4> head{};
    stream.read_exact(head);
    if (head[0] != 5) throw SocksError("bad request version");
    if (head[1] != 0x01) {
        socks_reply(stream, SocksReply::command_not_supported);
        throw SocksError("only CONNECT is supported");
    }

    protocol::SocksAddress addr;
    switch (head[3]) {
        case 1:
            addr.type = protocol::AddressType::ipv4;
            addr.addr.resize(4);
            break;
        case 4:
            addr.type = protocol::AddressType::ipv6;
            addr.addr.resize(16);
            break;
        case 3: {
            addr.type = protocol::AddressType::domain;
            auto len = read_u8(stream);
            if (len == 0) {
                socks_reply(stream, SocksReply::general_failure);
                throw SocksError("empty domain name");
            }
            addr.addr.resize(len);
            break;
        }
        default:
            socks_reply(stream, SocksReply::address_type_not_supported);
            throw SocksError("unsupported address type");
    }
    stream.read_exact(addr.addr);
    std::array<std::uint8_t, 2> port{};
    stream.read_exact(port);
    addr.port = static_cast<std::uint16_t>(port[0] << 8 | port[1]);
    return addr;
}

void socks_reply(net::Stream& stream, SocksReply reply) {
    stream.write_all(Bytes{5, static_cast<std::uint8_t>(reply), 0, 1, 0, 0, 0, 0, 0, 0});
}

void socks_connect(net::Stream& stream, const std::string& host, std::uint16_t port) {
    stream.write_all(Bytes{5, 1, 0});
    std::array<std::uint8_t, 2> choice{};
    stream.read_exact(choice);
    if (choice[0] != 5 || choice[1] != 0) throw SocksError("server refused no-auth");
    Bytes req{5, 1, 0};
    protocol::encode_address(req, protocol::SocksAddress::from_host(host, port));
    stream.write_all(req);
    std::array<std::uint8_t, 4> head{};
    stream.read_exact(head);
    if (head[1] != 0) throw SocksError("CONNECT failed with reply " + std::to_string(head[1]));
    std::size_t rest = head[3] == 1 ? 4 : head[3] == 4 ? 16 : 0;
    if (head[3] == 3) rest = read_u8(stream);
    Bytes tail(rest + 2);
    stream.read_exact(tail);
}

}  // namespace censorless::proxy
