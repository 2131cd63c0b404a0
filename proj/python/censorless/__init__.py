"""Python access to the CensorLess core: keys and sealed boxes, message
codecs, the SSRF table, the censorship simulator and the cost model."""

from ._censorless import (  # noqa: F401
    CompressionError,
    CryptoError,
    DecodeError,
    compress,
    cost_table,
    decode_payload,
    decompress,
    encode_start_payload,
    is_function_url,
    keygen,
    monthly_private_cost,
    monthly_vanilla_cost,
    open,
    requests_for_traffic,
    seal,
    sign,
    simulate,
    spot_baseline_monthly,
    ssrf_check,
    verify,
)

__version__ = "0.1.0"
