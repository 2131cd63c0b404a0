#pragma once

// Ed25519 identities with sealed-box encryption.
//
// Signatures use Ed25519 directly. Confidentiality converts the recipient's
// Ed25519 key to its Montgomery (X25519) form and uses an anonymous sealed
// box: a fresh ephemeral key per message, X25519 key agreement and
// XSalsa20-Poly1305. Every seal is randomized.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "censorless/bytes.hpp"

namespace censorless::protocol {

using PublicKey = std::array<std::uint8_t, 32>;
using Seed = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

enum class CryptoErrc {
    bad_seed,
    invalid_public_key,
    empty_plaintext,
    truncated,
    authentication_failed,
};

class CryptoError : public std::runtime_error {
public:
    CryptoError(CryptoErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    CryptoErrc code() const noexcept { return code_; }

private:
    CryptoErrc code_;
};

/// Secret half of a keypair. Holds the 32-byte seed (what key files store)
/// and the expanded 64-byte signing key derived from it.
class SecretKey {
public:
    explicit SecretKey(const Seed& seed);

    const Seed& seed() const noexcept { return seed_; }
    const std::array<std::uint8_t, 64>& expanded() const noexcept { return expanded_; }

    friend bool operator==(const SecretKey& a, const SecretKey& b) { return a.seed_ == b.seed_; }

private:
    Seed seed_;
    std::array<std::uint8_t, 64> expanded_{};
};

struct KeyPair {
    PublicKey public_key;
    SecretKey secret_key;
};

/// Deterministic for a given seed; random seed when none is supplied.
KeyPair generate_keypair(const std::optional<Seed>& seed = std::nullopt);

/// Accepts a seed of any length and throws CryptoError(bad_seed) unless it is
/// exactly 32 bytes.
KeyPair keypair_from_seed_bytes(ByteView seed);

/// Libsodium must be initialized once per process; every entry point here
/// calls this.
void ensure_crypto_initialized();

struct SealedEnvelope {
    PublicKey recipient_hint{};
    Bytes ciphertext;

    std::size_t length() const noexcept { return ciphertext.size(); }

    /// recipient_hint || ciphertext
    Bytes serialize() const;
    /// Throws CryptoError(truncated) when shorter than hint + sealed-box overhead.
    static SealedEnvelope parse(ByteView bytes);

    friend bool operator==(const SealedEnvelope&, const SealedEnvelope&) = default;
};

/// Bytes added by seal() on top of the plaintext (hint excluded).
std::size_t seal_overhead();

SealedEnvelope seal(ByteView plaintext, const PublicKey& recipient);

/// Returns the plaintext or throws CryptoError; never returns partial output.
Bytes open(const SealedEnvelope& envelope, const KeyPair& recipient);

Signature sign(ByteView message, const SecretKey& secret);
bool verify(ByteView message, const Signature& signature, const PublicKey& signer);

}  // namespace censorless::protocol
