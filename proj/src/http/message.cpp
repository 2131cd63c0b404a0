#include "censorless/http/message.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace censorless::http {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void Headers::set(std::string name, std::string value) {
    // Keeps the position of the first occurrence.
    auto first = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return iequals(e.first, name); });
    if (first == entries_.end()) {
        add(std::move(name), std::move(value));
        return;
    }
    first->second = std::move(value);
    entries_.erase(std::remove_if(std::next(first), entries_.end(), [&](const Entry& e) { return iequals(e.first, name); }),
                   entries_.end());
}

void Headers::remove(std::string_view name) {
    std::erase_if(entries_, [&](const Entry& e) { return iequals(e.first, name); });
}

std::optional<std::string> Headers::get(std::string_view name) const {
    for (const auto& [k, v] : entries_)
        if (iequals(k, name)) return v;
    return std::nullopt;
}

std::string Url::authority() const {
    bool default_port = (scheme == "http" && port == 80) || (scheme == "https" && port == 443);
    std::string h = host.find(':') != std::string::npos ? "[" + host + "]" : host;
    return default_port ? h : h + ":" + std::to_string(port);
}

std::string Url::str() const { return scheme + "://" + authority() + path; }

std::optional<Url> parse_url(std::string_view text) {
    Url url;
    auto sep = text.find("://");
    if (sep == std::string_view::npos) return std::nullopt;
    url.scheme = to_lower(text.substr(0, sep));
    if (url.scheme != "http" && url.scheme != "https") return std::nullopt;
    auto rest = text.substr(sep + 3);
    auto slash = rest.find_first_of("/?#");
    auto authority = rest.substr(0, slash);
    if (slash == std::string_view::npos) {
        url.path = "/";
    } else {
        url.path = std::string(rest.substr(slash));
        if (url.path.front() != '/') url.path = "/" + url.path;
        if (auto hash = url.path.find('#'); hash != std::string::npos) url.path.resize(hash);
    }
    if (authority.empty() || authority.find('@') != std::string_view::npos) return std::nullopt;
    url.port = url.scheme == "https" ? 443 : 80;
    std::string_view host = authority;
    if (authority.front() == '[') {
        auto close = authority.find(']');
        if (close == std::string_view::npos) return std::nullopt;
        host = authority.substr(1, close - 1);
        auto after = authority.substr(close + 1);
        if (!after.empty()) {
            if (after.front() != ':') return std::nullopt;
            authority = after;
        } else {
            authority = {};
        }
    } else if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
        host = authority.substr(0, colon);
        authority = authority.substr(colon);
    } else {
        authority = {};
    }
    if (!authority.empty()) {
        auto digits = authority.substr(1);
        unsigned value = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (ec != std::errc() || p != digits.data() + digits.size() || value == 0 || value > 65535)
            return std::nullopt;
        url.port = static_cast<std::uint16_t>(value);
    }
    if (host.empty()) return std::nullopt;
    url.host = to_lower(host);
    return url;
}

std::string host_without_port(std::string_view host) {
    if (!host.empty() && host.front() == '[') {
        auto close = host.find(']');
        return to_lower(host.substr(1, close == std::string_view::npos ? std::string_view::npos : close - 1));
    }
    auto colon = host.rfind(':');
    if (colon != std::string_view::npos && host.find(':') == colon) host = host.substr(0, colon);
    return to_lower(host);
}

std::string_view reason_phrase(int status) {
    switch (status) {
        case 200: return "OK";
        case 204: return "No Content";
        case 301: return "Moved Permanently";
        case 302: return "Found";
        case 304: return "Not Modified";
        case 400: return "Bad Request";
        case 403: return "Forbidden";
        case 404: return "Not Found";
        case 405: return "Method Not Allowed";
        case 413: return "Payload Too Large";
        case 429: return "Too Many Requests";
        case 500: return "Internal Server Error";
        case 502: return "Bad Gateway";
        case 503: return "Service Unavailable";
        case 504: return "Gateway Timeout";
        default: return "Unknown";
    }
}

}  // namespace censorless::http
