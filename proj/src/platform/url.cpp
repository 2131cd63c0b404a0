#include "censorless/platform/url.hpp"

#include <algorithm>

namespace censorless::platform {

namespace {
constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
constexpr std::string_view kScheme = "https://";
constexpr std::string_view kInfix = ".lambda-url.";
constexpr std::string_view kSuffix = ".on.aws";

bool is_id_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }

bool is_region_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-'; }
}  // namespace

std::string random_function_id(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
    std::string id(kFunctionIdLength, 'a');
    for (auto& c : id) c = kAlphabet[pick(rng)];
    return id;
}

std::string function_host(std::string_view id, std::string_view region) {
    std::string host;
    host.append(id).append(kInfix).append(region).append(kSuffix);
    return host;
}

std::string function_url(std::string_view id, std::string_view region) {
    return std::string(kScheme) + function_host(id, region) + "/";
}

std::optional<ParsedFunctionUrl> parse_function_url(std::string_view url) {
    if (!url.starts_with(kScheme)) return std::nullopt;
    url.remove_prefix(kScheme.size());
    if (!url.ends_with('/')) return std::nullopt;
    url.remove_suffix(1);
    if (!url.ends_with(kSuffix)) return std::nullopt;
    std::string_view host = url;
    url.remove_suffix(kSuffix.size());

    if (url.size() < kFunctionIdLength + kInfix.size() + 1) return std::nullopt;
    auto id = url.substr(0, kFunctionIdLength);
    if (!std::all_of(id.begin(), id.end(), is_id_char)) return std::nullopt;
    url.remove_prefix(kFunctionIdLength);
    if (!url.starts_with(kInfix)) return std::nullopt;
    url.remove_prefix(kInfix.size());
    auto region = url;
    if (region.empty() || !std::all_of(region.begin(), region.end(), is_region_char)) return std::nullopt;
    return ParsedFunctionUrl{std::string(id), std::string(region), std::string(host)};
}

}  // namespace censorless::platform
