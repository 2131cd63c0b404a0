"""Independent reference values for the protocol tests.

Uses the `cryptography` package (Ed25519) and PyNaCl (sealed boxes), not the
project's own code. The printed values are frozen in test_crypto.cpp and
docs/private-protocol.md; rerun this script to check them.
"""

import struct

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from nacl.bindings import (
    crypto_box_seal_open,
    crypto_sign_ed25519_pk_to_curve25519,
    crypto_sign_ed25519_sk_to_curve25519,
    crypto_sign_seed_keypair,
)
from nacl.public import PublicKey, SealedBox


def public_key(seed: bytes) -> bytes:
    key = Ed25519PrivateKey.from_private_bytes(seed)
    return key.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)


def main() -> None:
    zero = bytes(32)
    counting = bytes(range(32))
    print("pk(zero seed)     ", public_key(zero).hex())
    print("pk(00..1f seed)   ", public_key(counting).hex())
    sig = Ed25519PrivateKey.from_private_bytes(counting).sign(struct.pack(">Q", 1))
    print("sig(id=1, 00..1f) ", sig.hex())

    # A sealed box to the 00..1f identity, produced by libsodium via PyNaCl.
    pk, sk = crypto_sign_seed_keypair(counting)
    curve_pk = crypto_sign_ed25519_pk_to_curve25519(pk)
    box = SealedBox(PublicKey(curve_pk)).encrypt(b"censorless test vector")
    print("envelope          ", (pk + box).hex())
    assert crypto_box_seal_open(box, curve_pk, crypto_sign_ed25519_sk_to_curve25519(sk)) == b"censorless test vector"


if __name__ == "__main__":
    main()
