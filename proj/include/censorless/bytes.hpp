#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace censorless {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string hex_encode(ByteView data);

/// Accepts upper or lower case; throws std::invalid_argument on odd length or
/// non-hex characters.
Bytes hex_decode(std::string_view hex);

// Big-endian append/read helpers shared by the wire codecs.
void put_u8(Bytes& out, std::uint8_t v);
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_bytes(Bytes& out, ByteView v);

std::uint16_t load_u16(ByteView b);
std::uint32_t load_u32(ByteView b);
std::uint64_t load_u64(ByteView b);

}  // namespace censorless
