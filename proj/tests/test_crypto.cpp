#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "censorless/bytes.hpp"
#include "censorless/protocol/crypto.hpp"
#include "censorless/protocol/messages.hpp"
#include "test_support.hpp"

using namespace censorless;
using namespace censorless::protocol;

namespace {

// Frozen outputs of tests/oracles/protocol_vectors.py.
constexpr const char* kZeroSeedPublic = "3b6a27bcceb6a42d62a3a8d02a6f0d73653215771de243a63ac048a18b59da29";
constexpr const char* kCountingSeedPublic = "03a107bff3ce10be1d70dd18e74bc09967e4d6309ba50d5f1ddc8664125531b8";
constexpr const char* kCountingSigId1 =
    "011ffc489ad2cd0575b657102c1a5ef3199b53748ed3056392d4e0745ea49a704f265c16d663becd27432a457bf263e60518259e30383305"
    "176f5f2f34528606";
constexpr const char* kForeignEnvelope =
    "03a107bff3ce10be1d70dd18e74bc09967e4d6309ba50d5f1ddc8664125531b81b51986654f028db015f6c831d883d279053f57b674b120f"
    "ee50b5ecefdde93cefdb8f5b3c5c4fcb156f0b06c0dc5978c3f8ead8198e71009e71f394802018b6f0b167152650";

Seed counting_seed() {
    Seed s{};
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::uint8_t>(i);
    return s;
}

}  // namespace

TEST(Keygen, ZeroSeedMatchesReferenceImplementation) {
    auto kp = generate_keypair(Seed{});
    EXPECT_EQ(hex_encode(kp.public_key), kZeroSeedPublic);
    EXPECT_EQ(hex_encode(generate_keypair(counting_seed()).public_key), kCountingSeedPublic);
}

TEST(Keygen, DeterministicAndInjective) {
    auto a = generate_keypair(counting_seed());
    auto b = generate_keypair(counting_seed());
    EXPECT_EQ(a.public_key, b.public_key);
    EXPECT_EQ(a.secret_key, b.secret_key);
    EXPECT_NE(generate_keypair(Seed{}).public_key, a.public_key);
    EXPECT_NE(generate_keypair().public_key, generate_keypair().public_key);
}

TEST(Keygen, RejectsWrongSeedLength) {
    Bytes short_seed(31, 0);
    EXPECT_THROW(keypair_from_seed_bytes(short_seed), CryptoError);
    Bytes long_seed(33, 0);
    EXPECT_THROW(keypair_from_seed_bytes(long_seed), CryptoError);
    Bytes exact(32, 0);
    EXPECT_EQ(hex_encode(keypair_from_seed_bytes(exact).public_key), kZeroSeedPublic);
}

TEST(Seal, RoundTripUpToOneMebibyte) {
    auto kp = generate_keypair();
    std::mt19937_64 rng(1);
    for (std::size_t n : {1u, 2u, 100u, 65536u, 1u << 20}) {
        auto m = test::random_bytes(rng, n);
        auto env = seal(m, kp.public_key);
        EXPECT_EQ(env.recipient_hint, kp.public_key);
        EXPECT_EQ(env.length(), n + seal_overhead());
        EXPECT_EQ(open(env, kp), m) << n;
    }
}

TEST(Seal, IsRandomized) {
    auto kp = generate_keypair();
    auto m = to_bytes("same plaintext");
    auto a = seal(m, kp.public_key);
    auto b = seal(m, kp.public_key);
    EXPECT_NE(a.ciphertext, b.ciphertext);
    EXPECT_EQ(open(a, kp), m);
    EXPECT_EQ(open(b, kp), m);
}

TEST(Seal, CiphertextDiffersFromPlaintext) {
    auto kp = generate_keypair();
    auto m = to_bytes("sentinel-plaintext-0123456789");
    auto wire = seal(m, kp.public_key).serialize();
    EXPECT_EQ(std::search(wire.begin(), wire.end(), m.begin(), m.end()), wire.end());
}

TEST(Seal, WrongKeyFailsWithoutOutput) {
    auto a = generate_keypair();
    auto b = generate_keypair();
    auto env = seal(to_bytes("secret"), a.public_key);
    try {
        open(env, b);
        FAIL() << "opened with the wrong key";
    } catch (const CryptoError& e) {
        EXPECT_EQ(e.code(), CryptoErrc::authentication_failed);
    }
}

TEST(Seal, RejectsEmptyPlaintextAndBadKey) {
    auto kp = generate_keypair();
    EXPECT_THROW(seal(Bytes{}, kp.public_key), CryptoError);
    PublicKey bogus{};
    bogus.fill(0xff);
    EXPECT_THROW(seal(to_bytes("x"), bogus), CryptoError);
}

TEST(Open, TruncatedAndEmptyEnvelopes) {
    EXPECT_THROW(SealedEnvelope::parse(Bytes{}), CryptoError);
    EXPECT_THROW(SealedEnvelope::parse(Bytes(32 + seal_overhead() - 1, 0)), CryptoError);
    auto kp = generate_keypair();
    SealedEnvelope empty;
    empty.recipient_hint = kp.public_key;
    EXPECT_THROW(open(empty, kp), CryptoError);
}

TEST(Open, EverySingleBitFlipIsDetected) {
    auto kp = generate_keypair();
    auto env = seal(to_bytes("tamper me"), kp.public_key);
    for (std::size_t byte = 0; byte < env.ciphertext.size(); ++byte) {
        for (int bit = 0; bit < 8; ++bit) {
            auto t = env;
            t.ciphertext[byte] ^= static_cast<std::uint8_t>(1u << bit);
            EXPECT_THROW(open(t, kp), CryptoError) << byte << ":" << bit;
        }
    }
}

TEST(Open, HintMustNameTheRecipient) {
    auto kp = generate_keypair();
    auto env = seal(to_bytes("routed"), kp.public_key);
    for (std::size_t byte = 0; byte < env.recipient_hint.size(); ++byte) {
        auto t = env;
        t.recipient_hint[byte] ^= 0x01;
        EXPECT_THROW(open(t, kp), CryptoError);
    }
}

TEST(Open, AcceptsEnvelopeFromIndependentImplementation) {
    auto kp = generate_keypair(counting_seed());
    auto env = SealedEnvelope::parse(hex_decode(kForeignEnvelope));
    EXPECT_EQ(to_string(open(env, kp)), "censorless test vector");
}

TEST(ConnectionIdSignature, MatchesReferenceAndVerifies) {
    auto kp = generate_keypair(counting_seed());
    auto c = sign_connection_id(1, kp.secret_key);
    EXPECT_EQ(hex_encode(c.signature), kCountingSigId1);
    EXPECT_TRUE(verify_connection_id(c, kp.public_key));
    EXPECT_FALSE(verify_connection_id(c, generate_keypair().public_key));
    auto other = c;
    other.id = 2;
    EXPECT_FALSE(verify_connection_id(other, kp.public_key));
}

TEST(ConnectionIdSignature, NoCrossVerificationOverRandomTrials) {
    std::mt19937_64 rng(99);
    std::vector<KeyPair> keys;
    for (int i = 0; i < 4; ++i) keys.push_back(generate_keypair());
    for (int trial = 0; trial < 200; ++trial) {
        auto& signer = keys[rng() % keys.size()];
        auto id = rng();
        auto c = sign_connection_id(id, signer.secret_key);
        for (auto& k : keys) EXPECT_EQ(verify_connection_id(c, k.public_key), &k == &signer);
        auto moved = c;
        moved.id = id + 1 + rng() % 1000;
        EXPECT_FALSE(verify_connection_id(moved, signer.public_key));
    }
}
