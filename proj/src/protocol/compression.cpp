#include "censorless/protocol/compression.hpp"

#include <zlib.h>

namespace censorless::protocol {

Compressed compress(ByteView data) {
    if (data.empty()) return {};
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    Bytes out(bound);
    if (compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()), Z_DEFAULT_COMPRESSION) != Z_OK ||
        bound >= data.size()) {
        return Compressed{Bytes(data.begin(), data.end()), false};
    }
    out.resize(bound);
    return Compressed{std::move(out), true};
}

Bytes decompress(ByteView data, std::size_t original_length) {
    Bytes out(original_length);
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw CompressionError("inflateInit failed");
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    std::size_t produced = zs.total_out;
    bool input_left = zs.avail_in != 0;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) {
        if (rc == Z_BUF_ERROR && zs.avail_out == 0)
            throw CompressionError("inflated data exceeds declared original length");
        throw CompressionError("corrupt compressed stream");
    }
    if (produced != original_length) throw CompressionError("inflated length differs from declared original length");
    if (input_left) throw CompressionError("trailing bytes after compressed stream");
    return out;
}

}  // namespace censorless::protocol
