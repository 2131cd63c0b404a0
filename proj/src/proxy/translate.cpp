#include "censorless/proxy/translate.hpp"

#include <zlib.h>

#include "censorless/bridge/bridge.hpp"

namespace censorless::proxy {

namespace {

constexpr std::string_view kMarker = "https:";
constexpr std::string_view kReplacement = "http:";

bool starts_with_http(std::string_view v) { return v.size() >= 5 && http::iequals(v.substr(0, 5), "http:"); }

}  // namespace

bool header_allowed(std::string_view name) {
    for (auto allowed : kHeaderAllowlist)
        if (http::iequals(name, allowed)) return true;
    return false;
}

OutboundRequest translate_request(const http::Request& ex, const http::Url& bridge) {
    if (ex.method != "GET" && ex.method != "POST") throw TranslateError("unsupported method " + ex.method);
    auto target = http::parse_url(ex.target);
    if (!target) throw TranslateError("target is not an absolute http URL: " + ex.target);

    OutboundRequest out;
    out.connect = bridge;
    out.connect.scheme = "https";
    if (bridge.scheme != "https" && bridge.port == 80) out.connect.port = 443;
    out.request.method = ex.method;
    out.request.target = target->path;
    for (const auto& [name, value] : ex.headers.entries()) {
        if (!header_allowed(name) || http::iequals(name, "Host")) continue;
        if (http::iequals(name, "Strict-Transport-Security")) {
            out.request.headers.add(name, "max-age=0");
        } else if ((http::iequals(name, "Referer") || http::iequals(name, "Origin")) && starts_with_http(value)) {
            out.request.headers.add(name, "https:" + value.substr(5));
        } else {
            out.request.headers.add(name, value);
        }
    }
    out.request.headers.set("Host", bridge.host);
    out.request.headers.set(bridge::kHostHeader, target->authority());
    out.request.body = ex.body;
    return out;
}

OutboundRequest build_fronted_request(const OutboundRequest& translated, const std::string& front_sni,
                                      const std::string& real_bridge) {
    OutboundRequest out = translated;
    out.connect.host = front_sni;
    out.request.headers.set("Host", real_bridge);
    return out;
}

bool is_textual(std::string_view content_type) {
    auto type = http::to_lower(content_type.substr(0, content_type.find(';')));
    while (!type.empty() && type.back() == ' ') type.pop_back();
    while (!type.empty() && type.front() == ' ') type.erase(type.begin());
    return type.rfind("text/", 0) == 0 || type == "application/json" || type == "application/javascript" ||
           type == "application/xhtml+xml";
}

http::Headers translate_response_headers(const http::Headers& headers) {
    http::Headers out;
    for (const auto& [k, v] : headers.entries()) {
        if (http::iequals(k, "Strict-Transport-Security") || http::iequals(k, "Upgrade-Insecure-Requests") ||
            http::iequals(k, "Content-Length") || http::iequals(k, "Transfer-Encoding") || http::iequals(k, "Connection") ||
            http::iequals(k, "Keep-Alive") || http::iequals(k, bridge::kMigrateHeader))
            continue;
        out.add(k, v);
    }
    return out;
}

std::string HttpsRewriter::feed(std::string_view chunk) {
    std::string buf = std::move(carry_);
    buf.append(chunk);
    carry_.clear();
    std::string out;
    out.reserve(buf.size());
    std::size_t i = 0;
    while (i < buf.size()) {
        auto hit = buf.find(kMarker, i);
        if (hit == std::string::npos) break;
        out.append(buf, i, hit - i);
        out.append(kReplacement);
        i = hit + kMarker.size();
    }
    // Hold back a tail that could be the start of a marker split across chunks.
    std::size_t keep = 0;
    for (std::size_t k = std::min(kMarker.size() - 1, buf.size() - i); k > 0; --k) {
        if (std::string_view(buf).substr(buf.size() - k) == kMarker.substr(0, k)) {
            keep = k;
            break;
        }
    }
    out.append(buf, i, buf.size() - i - keep);
    carry_ = buf.substr(buf.size() - keep);
    return out;
}

std::string HttpsRewriter::finish() { return std::exchange(carry_, {}); }

struct BodyTranslator::Inflater {
    z_stream zs{};
    bool done = false;

    Inflater() {
        // 15 + 32: accept both zlib and gzip wrappers.
        if (inflateInit2(&zs, 15 + 32) != Z_OK) throw std::runtime_error("inflateInit2 failed");
    }
    ~Inflater() { inflateEnd(&zs); }

    std::string feed(std::string_view in) {
        std::string out;
        if (done) return out;
        zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
        zs.avail_in = static_cast<uInt>(in.size());
        char buf[16384];
        while (zs.avail_in > 0 || zs.avail_out == 0) {
            zs.next_out = reinterpret_cast<Bytef*>(buf);
            zs.avail_out = sizeof buf;
            int rc = inflate(&zs, Z_NO_FLUSH);
            out.append(buf, sizeof buf - zs.avail_out);
            if (rc == Z_STREAM_END) {
                done = true;
                break;
            }
            if (rc == Z_BUF_ERROR) break;
            if (rc != Z_OK) throw std::runtime_error("corrupt compressed body");
        }
        return out;
    }
};

BodyTranslator::BodyTranslator(const http::Headers& upstream_headers) {
    rewrite_ = is_textual(upstream_headers.get("Content-Type").value_or(""));
    auto encoding = http::to_lower(upstream_headers.get("Content-Encoding").value_or("identity"));
    if (rewrite_ && (encoding == "gzip" || encoding == "deflate" || encoding == "x-gzip")) {
        decoder_ = std::make_unique<Inflater>();
    } else if (encoding != "identity" && !encoding.empty()) {
        // Unknown codings (br, zstd) are passed through untouched.
        rewrite_ = false;
    }
}

BodyTranslator::~BodyTranslator() = default;

std::string BodyTranslator::feed(std::string_view chunk) {
    if (!rewrite_) return std::string(chunk);
    if (decoder_) return rewriter_.feed(decoder_->feed(chunk));
    return rewriter_.feed(chunk);
}

std::string BodyTranslator::finish() { return rewrite_ ? rewriter_.finish() : std::string(); }

http::Response translate_response(const http::Response& resp) {
    http::Response out;
    out.status = resp.status;
    out.headers = translate_response_headers(resp.headers);
    BodyTranslator body(resp.headers);
    if (body.decodes()) out.headers.remove("Content-Encoding");
    auto text = body.feed(to_string(resp.body));
    text += body.finish();
    out.body = to_bytes(text);
    return out;
}

}  // namespace censorless::proxy
