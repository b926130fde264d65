"""Bitstring helpers: messages and keys are numpy uint8 arrays of 0/1."""
from __future__ import annotations

import numpy as np

_HEX = "0123456789abcdef"


def as_bits(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bitstrings must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bitstrings may contain only 0 and 1")
    return arr


def xor_bits(a, b) -> np.ndarray:
    x = as_bits(a)
    y = as_bits(b)
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    return np.bitwise_xor(x, y)


def bits_from_hex(text: str) -> np.ndarray:
    """Each hex digit expands to 4 bits, most significant first."""
    text = text.lower()
    out = np.empty(4 * len(text), dtype=np.uint8)
    for i, ch in enumerate(text):
        v = _HEX.find(ch)
        if v < 0:
            raise ValueError(f"invalid hex digit {ch!r}")
        out[4 * i] = (v >> 3) & 1
        out[4 * i + 1] = (v >> 2) & 1
        out[4 * i + 2] = (v >> 1) & 1
        out[4 * i + 3] = v & 1
    return out


def hex_from_bits(bits) -> str:
    arr = as_bits(bits)
    if len(arr) % 4 != 0:
        raise ValueError("bit length must be a multiple of 4")
    digits = []
    for i in range(0, len(arr), 4):
        v = int(arr[i]) << 3 | int(arr[i + 1]) << 2 | int(arr[i + 2]) << 1 | int(arr[i + 3])
        digits.append(_HEX[v])
    return "".join(digits)
