#include <gtest/gtest.h>

#include <zlib.h>

#include <random>
#include <thread>

#include "censorless/protocol/compression.hpp"
#include "censorless/protocol/crypto.hpp"
#include "censorless/protocol/nonce.hpp"
#include "test_support.hpp"

using namespace censorless;
using namespace censorless::protocol;

TEST(Compression, RepetitiveInputShrinks) {
    Bytes data(10 * 1024, 'a');
    auto c = compress(data);
    EXPECT_TRUE(c.compressed);
    EXPECT_LT(c.data.size(), 1024u);
    EXPECT_EQ(decompress(c.data, data.size()), data);
}

TEST(Compression, StreamIsPlainZlib) {
    // Any zlib implementation must be able to read what we send.
    Bytes data(5000, 'z');
    auto c = compress(data);
    ASSERT_TRUE(c.compressed);
    Bytes out(data.size());
    uLongf out_len = out.size();
    ASSERT_EQ(uncompress(out.data(), &out_len, c.data.data(), c.data.size()), Z_OK);
    EXPECT_EQ(out_len, data.size());
    EXPECT_EQ(out, data);
}

TEST(Compression, IncompressibleInputPassesThrough) {
    std::mt19937_64 rng(3);
    auto data = test::random_bytes(rng, 64);
    auto c = compress(data);
    EXPECT_FALSE(c.compressed);
    EXPECT_EQ(c.data, data);
}

TEST(Compression, EmptyInput) {
    auto c = compress(Bytes{});
    EXPECT_FALSE(c.compressed);
    EXPECT_TRUE(c.data.empty());
}

TEST(Compression, CorruptStreamAndLengthMismatch) {
    Bytes data(4096, 'q');
    auto c = compress(data);
    EXPECT_THROW(decompress(c.data, data.size() - 1), CompressionError);
    EXPECT_THROW(decompress(c.data, data.size() + 1), CompressionError);
    auto broken = c.data;
    broken[broken.size() / 2] ^= 0xff;
    EXPECT_THROW(decompress(broken, data.size()), CompressionError);
}

TEST(Compression, RoundTripProperty) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        Bytes data = test::random_bytes(rng, rng() % 5000);
        // Mix in runs so some inputs compress.
        if (i % 2)
            for (std::size_t j = 0; j < data.size(); ++j) data[j] = static_cast<std::uint8_t>(data[j] % 4);
        auto c = compress(data);
        if (c.compressed) {
            EXPECT_LT(c.data.size(), data.size());
            EXPECT_EQ(decompress(c.data, data.size()), data);
        } else {
            EXPECT_EQ(c.data, data);
        }
    }
}

TEST(NonceTable, StrictlyIncreasingPerKey) {
    NonceTable t;
    auto a = generate_keypair().public_key;
    auto b = generate_keypair().public_key;
    EXPECT_FALSE(t.accept(a, 0));
    EXPECT_TRUE(t.accept(a, 1));
    EXPECT_TRUE(t.accept(a, 2));
    EXPECT_TRUE(t.accept(a, 10));
    EXPECT_FALSE(t.accept(a, 10));
    EXPECT_FALSE(t.accept(a, 3));
    EXPECT_EQ(t.last(a), 10u);
    EXPECT_TRUE(t.accept(b, 5));
    EXPECT_FALSE(t.last(generate_keypair().public_key).has_value());
}

TEST(NonceTable, AcceptedSequenceIsIncreasingUnderReordering) {
    std::mt19937_64 rng(5);
    NonceTable t;
    std::vector<PublicKey> keys;
    for (int i = 0; i < 3; ++i) keys.push_back(generate_keypair().public_key);
    std::map<PublicKey, std::uint64_t> last;
    for (int i = 0; i < 5000; ++i) {
        auto& k = keys[rng() % keys.size()];
        std::uint64_t n = 1 + rng() % 200;
        bool ok = t.accept(k, n);
        bool expected = !last.count(k) || n > last[k];
        ASSERT_EQ(ok, expected);
        if (ok) last[k] = n;
    }
}

TEST(NonceTable, ConcurrentAcceptsEachNonceOnce) {
    NonceTable t;
    auto k = generate_keypair().public_key;
    std::atomic<int> accepted{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < 4; ++w) {
        threads.emplace_back([&] {
            for (std::uint64_t n = 1; n <= 2000; ++n)
                if (t.accept(k, n)) ++accepted;
        });
    }
    for (auto& th : threads) th.join();
    // Every accepted nonce was a new maximum, so at most 2000 can pass.
    EXPECT_LE(accepted.load(), 2000);
    EXPECT_EQ(t.last(k), 2000u);
}

TEST(NonceCounter, MonotoneAndAdvance) {
    NonceCounter c(0);
    EXPECT_EQ(c.next(), 1u);
    EXPECT_EQ(c.next(), 2u);
    c.advance_to(100);
    EXPECT_EQ(c.next(), 100u);
    c.advance_to(50);
    EXPECT_EQ(c.next(), 101u);
}
