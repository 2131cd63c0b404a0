#include "censorless/protocol/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>

namespace censorless::protocol {

void ensure_crypto_initialized() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    });
}

SecretKey::SecretKey(const Seed& seed) : seed_(seed) {
    ensure_crypto_initialized();
    std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pk{};
    crypto_sign_seed_keypair(pk.data(), expanded_.data(), seed_.data());
}

KeyPair generate_keypair(const std::optional<Seed>& seed) {
    ensure_crypto_initialized();
    Seed s{};
    if (seed) {
        s = *seed;
    } else {
        randombytes_buf(s.data(), s.size());
    }
    SecretKey secret(s);
    PublicKey pk{};
    crypto_sign_ed25519_sk_to_pk(pk.data(), secret.expanded().data());
    return KeyPair{pk, secret};
}

KeyPair keypair_from_seed_bytes(ByteView seed) {
    if (seed.size() != 32) throw CryptoError(CryptoErrc::bad_seed, "seed must be exactly 32 bytes");
    Seed s{};
    std::copy(seed.begin(), seed.end(), s.begin());
    return generate_keypair(s);
}

Bytes SealedEnvelope::serialize() const {
    Bytes out;
    out.reserve(recipient_hint.size() + ciphertext.size());
    put_bytes(out, recipient_hint);
    put_bytes(out, ciphertext);
    return out;
}

SealedEnvelope SealedEnvelope::parse(ByteView bytes) {
    if (bytes.size() < 32 + crypto_box_SEALBYTES) throw CryptoError(CryptoErrc::truncated, "sealed envelope truncated");
    SealedEnvelope env;
    std::copy_n(bytes.begin(), 32, env.recipient_hint.begin());
    env.ciphertext.assign(bytes.begin() + 32, bytes.end());
    return env;
}

std::size_t seal_overhead() { return crypto_box_SEALBYTES; }

SealedEnvelope seal(ByteView plaintext, const PublicKey& recipient) {
    ensure_crypto_initialized();
    if (plaintext.empty()) throw CryptoError(CryptoErrc::empty_plaintext, "cannot seal an empty message");
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> curve_pk{};
    if (crypto_sign_ed25519_pk_to_curve25519(curve_pk.data(), recipient.data()) != 0)
        throw CryptoError(CryptoErrc::invalid_public_key, "recipient key is not a valid Ed25519 point");
    SealedEnvelope env;
    env.recipient_hint = recipient;
    env.ciphertext.resize(plaintext.size() + crypto_box_SEALBYTES);
    if (crypto_box_seal(env.ciphertext.data(), plaintext.data(), plaintext.size(), curve_pk.data()) != 0)
        throw CryptoError(CryptoErrc::invalid_public_key, "sealing failed");
    return env;
}

Bytes open(const SealedEnvelope& envelope, const KeyPair& recipient) {
    ensure_crypto_initialized();
    if (envelope.ciphertext.size() < crypto_box_SEALBYTES)
        throw CryptoError(CryptoErrc::truncated, "ciphertext shorter than sealed-box overhead");
    if (envelope.ciphertext.size() == crypto_box_SEALBYTES)
        throw CryptoError(CryptoErrc::truncated, "ciphertext carries no message");
    if (envelope.recipient_hint != recipient.public_key)
        throw CryptoError(CryptoErrc::authentication_failed, "envelope addressed to another key");
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> curve_pk{};
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> curve_sk{};
    if (crypto_sign_ed25519_pk_to_curve25519(curve_pk.data(), recipient.public_key.data()) != 0)
        throw CryptoError(CryptoErrc::invalid_public_key, "own public key invalid");
    crypto_sign_ed25519_sk_to_curve25519(curve_sk.data(), recipient.secret_key.expanded().data());

    Bytes plain(envelope.ciphertext.size() - crypto_box_SEALBYTES);
    int rc = crypto_box_seal_open(plain.data(), envelope.ciphertext.data(), envelope.ciphertext.size(),
                                  curve_pk.data(), curve_sk.data());
    sodium_memzero(curve_sk.data(), curve_sk.size());
    if (rc != 0) {
        sodium_memzero(plain.data(), plain.size());
        throw CryptoError(CryptoErrc::authentication_failed, "sealed envelope failed authentication");
    }
    return plain;
}

Signature sign(ByteView message, const SecretKey& secret) {
    ensure_crypto_initialized();
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret.expanded().data());
    return sig;
}

bool verify(ByteView message, const Signature& signature, const PublicKey& signer) {
    ensure_crypto_initialized();
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), signer.data()) == 0;
}

}  // namespace censorless::protocol
