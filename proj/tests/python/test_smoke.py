import pytest

import censorless as cl

ZERO_SEED = bytes(32)
# Ed25519 public key for the all-zero seed, from an independent implementation.
ZERO_SEED_PUBLIC = bytes.fromhex("3b6a27bcceb6a42d62a3a8d02a6f0d73653215771de243a63ac048a18b59da29")


def test_keygen_is_deterministic_for_a_seed():
    seed, pub = cl.keygen(ZERO_SEED)
    assert seed == ZERO_SEED
    assert pub == ZERO_SEED_PUBLIC
    assert cl.keygen()[1] != pub


def test_seal_open_round_trip_and_tamper():
    seed, pub = cl.keygen(bytes(range(32)))
    env = cl.seal(b"hello exit", pub)
    assert cl.open(env, seed) == b"hello exit"
    flipped = bytearray(env)
    flipped[-1] ^= 1
    with pytest.raises(cl.CryptoError):
        cl.open(bytes(flipped), seed)


def test_signatures():
    seed, pub = cl.keygen(ZERO_SEED)
    sig = cl.sign(b"conn", seed)
    assert cl.verify(b"conn", sig, pub)
    assert not cl.verify(b"conm", sig, pub)


def test_payload_codec():
    _, pub = cl.keygen(ZERO_SEED)
    wire = cl.encode_start_payload(pub, 7, "example.com", 443)
    d = cl.decode_payload(wire)
    assert d == {"type": "start", "host": "example.com", "port": 443, "client_public_key": pub, "nonce": 7}
    with pytest.raises(cl.DecodeError):
        cl.decode_payload(wire[:-1])


def test_compression():
    data = b"a" * 10000
    packed, compressed = cl.compress(data)
    assert compressed and len(packed) < len(data)
    assert cl.decompress(packed, len(data)) == data


@pytest.mark.parametrize(
    "address,expected",
    [
        ("127.0.0.1", "loopback"),
        ("10.0.0.1", "private"),
        ("169.254.0.1", "link-local"),
        ("8.8.8.8", None),
        ("::ffff:127.0.0.1", "loopback"),
    ],
)
def test_ssrf(address, expected):
    got = cl.ssrf_check(address)
    if expected is None:
        assert got is None
    else:
        assert got is not None and got.startswith(expected)


def test_function_url_grammar():
    assert cl.is_function_url("https://" + "a" * 32 + ".lambda-url.us-east-1.on.aws/")
    assert not cl.is_function_url("https://" + "A" * 32 + ".lambda-url.us-east-1.on.aws/")


def test_costs():
    assert round(cl.monthly_vanilla_cost(), 2) == 0.27
    assert round(cl.monthly_private_cost(), 2) == 3.41
    with pytest.raises(ValueError):
        cl.monthly_private_cost(n_vps=0)
    assert "0.27" in cl.cost_table("fig8")


def test_simulate_is_deterministic():
    a = cl.simulate("fig7", seed=3)
    b = cl.simulate("fig7", seed=3)
    assert a == b
    assert 0.0 <= a["mean_connected"] <= 1.0
    assert len(a["connected_ratio"]) > 0
