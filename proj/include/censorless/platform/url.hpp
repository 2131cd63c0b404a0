#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace censorless::platform {

/// Length of the random function identifier in a function URL.
inline constexpr std::size_t kFunctionIdLength = 32;

/// Draws a random identifier over [a-z0-9] of kFunctionIdLength chars.
std::string random_function_id(std::mt19937_64& rng);

/// `https://<id>.lambda-url.<region>.on.aws/`
std::string function_url(std::string_view id, std::string_view region);

struct ParsedFunctionUrl {
    std::string id;
    std::string region;
    std::string host;
};

/// Validates the function URL grammar. Returns nullopt for anything that is
/// not exactly `https://<32 x [a-z0-9]>.lambda-url.<region>.on.aws/`.
std::optional<ParsedFunctionUrl> parse_function_url(std::string_view url);

/// Host part of a function URL (`<id>.lambda-url.<region>.on.aws`).
std::string function_host(std::string_view id, std::string_view region);

}  // namespace censorless::platform
