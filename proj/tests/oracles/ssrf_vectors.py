"""Boundary-address corpus for the SSRF deny table, classified with the
standard library's ipaddress module. Output is the C++ table in
tests/support/ssrf_vectors.inc."""

import ipaddress

TABLE = [
    ("127.0.0.0/8", "loopback"),
    ("::1/128", "loopback"),
    ("10.0.0.0/8", "private"),
    ("172.16.0.0/12", "private"),
    ("192.168.0.0/16", "private"),
    ("fc00::/7", "private"),
    ("169.254.0.0/16", "link-local"),
    ("fe80::/10", "link-local"),
    ("224.0.0.0/4", "multicast"),
    ("ff00::/8", "multicast"),
    ("255.255.255.255/32", "broadcast"),
    ("192.0.2.0/24", "documentation"),
    ("198.51.100.0/24", "documentation"),
    ("203.0.113.0/24", "documentation"),
    ("2001:db8::/32", "documentation"),
    ("0.0.0.0/32", "unspecified"),
    ("::/128", "unspecified"),
]
NETS = [(ipaddress.ip_network(n), r) for n, r in TABLE]


def classify(addr):
    if isinstance(addr, ipaddress.IPv6Address) and addr.ipv4_mapped is not None:
        addr = addr.ipv4_mapped
    for net, reason in NETS:
        if addr.version == net.version and addr in net:
            return reason
    return None


def corpus():
    seen = []
    for net, _ in NETS:
        lo, hi = int(net.network_address), int(net.broadcast_address)
        top = 2**32 - 1 if net.version == 4 else 2**128 - 1
        for v in (lo - 1, lo, lo + 1, hi - 1, hi, hi + 1):
            if 0 <= v <= top:
                a = ipaddress.ip_address(v) if net.version == 4 else ipaddress.IPv6Address(v)
                if a not in seen:
                    seen.append(a)
    extra = ["93.184.216.34", "8.8.8.8", "2606:4700::1111", "::ffff:127.0.0.1", "::ffff:10.1.2.3",
             "::ffff:8.8.8.8", "10.1.2.3", "203.0.113.9"]
    for e in extra:
        a = ipaddress.ip_address(e)
        if a not in seen:
            seen.append(a)
    return seen


def main():
    print("// Generated by tests/oracles/ssrf_vectors.py; do not edit.")
    for a in corpus():
        r = classify(a)
        print('{"%s", %s},' % (a, '"%s"' % r if r else "nullptr"))


if __name__ == "__main__":
    main()
