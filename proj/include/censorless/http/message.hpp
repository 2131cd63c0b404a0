#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "censorless/bytes.hpp"

namespace censorless::http {

/// Ordered header list; names compare case-insensitively.
class Headers {
public:
    using Entry = std::pair<std::string, std::string>;

    Headers() = default;
    Headers(std::initializer_list<Entry> entries) : entries_(entries) {}

    void add(std::string name, std::string value) { entries_.emplace_back(std::move(name), std::move(value)); }
    /// Replaces every header with this name by a single one at the position
    /// of the first.
    void set(std::string name, std::string value);
    void remove(std::string_view name);
    std::optional<std::string> get(std::string_view name) const;
    bool contains(std::string_view name) const { return get(name).has_value(); }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::vector<Entry>& entries() noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    friend bool operator==(const Headers&, const Headers&) = default;

private:
    std::vector<Entry> entries_;
};

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);

struct Request {
    std::string method = "GET";
    // Origin-form path plus query, or an absolute URL when a proxy received it.
    std::string target = "/";
    Headers headers;
    Bytes body;
};

struct Response {
    int status = 200;
    Headers headers;
    Bytes body;
};

/// Parsed absolute http(s) URL.
struct Url {
    std::string scheme;
    std::string host;
    std::uint16_t port = 0;  // explicit or scheme default
    std::string path = "/";  // includes the query string

    /// host, or host:port when the port is not the scheme default.
    std::string authority() const;
    std::string str() const;
};

/// Accepts http:// and https:// URLs only.
std::optional<Url> parse_url(std::string_view text);

/// Strips a trailing :port from a Host header value.
std::string host_without_port(std::string_view host);

/// Minimal reason phrases for the statuses this project emits.
std::string_view reason_phrase(int status);

}  // namespace censorless::http
