#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "censorless/net/socket.hpp"

namespace censorless::net {

enum class DenyReason {
    loopback,
    private_network,
    link_local,
    multicast,
    broadcast,
    documentation,
    unspecified,
    unresolved,
};

std::string_view to_string(DenyReason reason);

struct AddressRange {
    IpAddress network;
    int prefix_length = 0;
    DenyReason reason = DenyReason::private_network;

    bool contains(const IpAddress& address) const;
};

struct SsrfDecision {
    std::optional<DenyReason> denied;  // empty means allowed
    std::optional<IpAddress> address;  // address to connect to when allowed

    bool allowed() const noexcept { return !denied.has_value(); }
};

using Resolver = std::function<std::vector<IpAddress>(const std::string& host)>;

/// Outbound-address filter for the exit server. Decisions are made on
/// numeric addresses only; hostnames are resolved first and the caller must
/// connect to the returned address, never re-resolve.
class SsrfPolicy {
public:
    /// The standard deny table.
    SsrfPolicy();

    const std::vector<AddressRange>& ranges() const noexcept { return ranges_; }

    /// Lets one category through. Meant for tests hosting local servers.
    void exempt(DenyReason reason);

    /// IPv4-mapped IPv6 addresses are judged as the embedded IPv4 address.
    SsrfDecision check(const IpAddress& address) const;

    /// Resolves `host` (IP literals pass through) and denies if any resolved
    /// address is denied.
    SsrfDecision check_host(const std::string& host, const Resolver& resolver) const;

private:
    std::vector<AddressRange> ranges_;
    std::vector<DenyReason> exempt_;
};

}  // namespace censorless::net
