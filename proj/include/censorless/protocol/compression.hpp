#pragma once

#include <stdexcept>

#include "censorless/bytes.hpp"

namespace censorless::protocol {

/// zlib/deflate is the protocol's only codec.
inline constexpr const char* kCompressionCodec = "zlib-deflate";

struct Compressed {
    Bytes data;
    bool compressed = false;
};

class CompressionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deflates `data`; when that does not make it strictly smaller the input is
/// returned unchanged with compressed = false.
Compressed compress(ByteView data);

/// Inflates exactly `original_length` bytes. Throws CompressionError on a
/// corrupt stream or when the inflated size differs from original_length.
Bytes decompress(ByteView data, std::size_t original_length);

}  // namespace censorless::protocol
