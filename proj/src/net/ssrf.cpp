#include "censorless/net/ssrf.hpp"

#include <algorithm>
#include <stdexcept>

namespace censorless::net {

std::string_view to_string(DenyReason reason) {
    switch (reason) {
        case DenyReason::loopback: return "loopback";
        case DenyReason::private_network: return "private";
        case DenyReason::link_local: return "link-local";
        case DenyReason::multicast: return "multicast";
        case DenyReason::broadcast: return "broadcast";
        case DenyReason::documentation: return "documentation";
        case DenyReason::unspecified: return "unspecified";
        case DenyReason::unresolved: return "unresolved";
    }
    return "unknown";
}

bool AddressRange::contains(const IpAddress& address) const {
    if (address.family != network.family) return false;
    int full = prefix_length / 8;
    for (int i = 0; i < full; ++i)
        if (address.bytes[i] != network.bytes[i]) return false;
    int rest = prefix_length % 8;
    if (rest == 0) return true;
    auto mask = static_cast<std::uint8_t>(0xff << (8 - rest));
    return (address.bytes[full] & mask) == (network.bytes[full] & mask);
}

namespace {

AddressRange range(const char* cidr, DenyReason reason) {
    std::string_view text(cidr);
    auto slash = text.find('/');
    auto ip = IpAddress::parse(text.substr(0, slash));
    if (!ip) throw std::logic_error("bad built-in range");
    return AddressRange{*ip, std::stoi(std::string(text.substr(slash + 1))), reason};
}

}  // namespace

SsrfPolicy::SsrfPolicy() {
    using R = DenyReason;
    ranges_ = {
        range("127.0.0.0/8", R::loopback),        range("::1/128", R::loopback),
        range("10.0.0.0/8", R::private_network),  range("172.16.0.0/12", R::private_network),
        range("192.168.0.0/16", R::private_network), range("fc00::/7", R::private_network),
        range("169.254.0.0/16", R::link_local),   range("fe80::/10", R::link_local),
        range("224.0.0.0/4", R::multicast),       range("ff00::/8", R::multicast),
        range("255.255.255.255/32", R::broadcast),
        range("192.0.2.0/24", R::documentation),  range("198.51.100.0/24", R::documentation),
        range("203.0.113.0/24", R::documentation), range("2001:db8::/32", R::documentation),
        range("0.0.0.0/32", R::unspecified),      range("::/128", R::unspecified),
    };
}

void SsrfPolicy::exempt(DenyReason reason) {
    if (std::find(exempt_.begin(), exempt_.end(), reason) == exempt_.end()) exempt_.push_back(reason);
}

SsrfDecision SsrfPolicy::check(const IpAddress& address) const {
    auto ip = address.unmapped();
    for (const auto& r : ranges_) {
        if (!r.contains(ip)) continue;
        if (std::find(exempt_.begin(), exempt_.end(), r.reason) != exempt_.end()) break;
        return SsrfDecision{r.reason, std::nullopt};
    }
    return SsrfDecision{std::nullopt, ip};
}

SsrfDecision SsrfPolicy::check_host(const std::string& host, const Resolver& resolver) const {
    std::vector<IpAddress> addresses;
    if (auto literal = IpAddress::parse(host)) {
        addresses.push_back(*literal);
    } else if (resolver) {
        addresses = resolver(host);
    }
    if (addresses.empty()) return SsrfDecision{DenyReason::unresolved, std::nullopt};
    std::optional<IpAddress> first;
    for (const auto& a : addresses) {
        auto d = check(a);
        if (!d.allowed()) return d;
        if (!first) first = d.address;
    }
    return SsrfDecision{std::nullopt, first};
}

}  // namespace censorless::net
