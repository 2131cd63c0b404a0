#pragma once

// Request/response translation between the browser-facing plain HTTP side
// and the HTTPS requests sent to a bridge.

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "censorless/http/message.hpp"

namespace censorless::proxy {

class TranslateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Request headers that survive translation (X-Host is added on top).
inline constexpr std::string_view kHeaderAllowlist[] = {
    "Cookie", "User-Agent", "Host", "Content-Type", "Permission-Policy", "Accept", "Accept-Encoding", "Accept-Language",
    // Rewritten rather than dropped.
    "Referer", "Origin", "Strict-Transport-Security",
};

bool header_allowed(std::string_view name);

/// Where the request is sent and what is sent. `connect.host` is the TLS
/// server name; the Host header inside `request` names the bridge.
struct OutboundRequest {
    http::Url connect;
    http::Request request;
};

/// `ex.target` must be an absolute http:// or https:// URL; only GET and
/// POST are accepted.
OutboundRequest translate_request(const http::Request& ex, const http::Url& bridge);

/// Same request, but the connection (and SNI) goes to `front_sni` while the
/// Host header names `real_bridge`.
OutboundRequest build_fronted_request(const OutboundRequest& translated, const std::string& front_sni,
                                      const std::string& real_bridge);

/// text/*, application/json, application/javascript, application/xhtml+xml.
bool is_textual(std::string_view content_type);

/// Drops Strict-Transport-Security, Upgrade-Insecure-Requests, hop-by-hop
/// headers and Content-Length (the body may change size).
http::Headers translate_response_headers(const http::Headers& headers);

/// Streaming "https:" -> "http:" replacement that handles matches split
/// across chunk boundaries.
class HttpsRewriter {
public:
    std::string feed(std::string_view chunk);
    /// Returns any bytes held back at the end of the stream.
    std::string finish();

private:
    std::string carry_;
};

/// Streaming body transform for one response: inflates gzip/deflate textual
/// bodies, rewrites textual bodies, and passes everything else through.
class BodyTranslator {
public:
    explicit BodyTranslator(const http::Headers& upstream_headers);
    ~BodyTranslator();
    BodyTranslator(const BodyTranslator&) = delete;
    BodyTranslator& operator=(const BodyTranslator&) = delete;

    /// Whether the body is modified (so the original Content-Length is void).
    bool rewrites() const noexcept { return rewrite_; }
    /// Whether an upstream Content-Encoding is removed by decoding.
    bool decodes() const noexcept { return decoder_ != nullptr; }

    std::string feed(std::string_view chunk);
    std::string finish();

private:
    struct Inflater;
    bool rewrite_ = false;
    std::unique_ptr<Inflater> decoder_;
    HttpsRewriter rewriter_;
};

/// Whole-response convenience form of the streaming translation.
http::Response translate_response(const http::Response& resp);

}  // namespace censorless::proxy
