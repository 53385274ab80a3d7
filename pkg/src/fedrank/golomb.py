"""Golomb codes for geometrically distributed Lehmer coordinates.

An offline codec benchmark only; variable-length codewords do not fit the
fixed-ring secure sum, so nothing here is wired into the protocols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GolombDecodeError(ValueError):
    pass


@dataclass(frozen=True)
class GolombCodeword:
    bits: str
    k: int

    def __len__(self) -> int:
        return len(self.bits)


def golomb_parameter(ratio: float) -> int:
    """The K with ratio^K + ratio^(K+1) <= 1 < ratio^(K-1) + ratio^K."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    k = max(1, math.ceil(math.log(1.0 + ratio) / math.log(1.0 / ratio)))
    # guard the float ceiling at exact boundaries
    while k > 1 and ratio ** (k - 1) * (1.0 + ratio) <= 1.0:
        k -= 1
    while ratio**k * (1.0 + ratio) > 1.0:
        k += 1
    return k


def remainder_bits(k: int) -> int:
    return int(k - 1).bit_length()


def golomb_encode(value: int, k: int) -> GolombCodeword:
    if k < 1:
        raise ValueError("K must be >= 1")
    if value < 0:
        raise ValueError("Golomb codes encode non-negative integers")
    q, r = divmod(int(value), k)
    width = remainder_bits(k)
    tail = format(r, f"0{width}b") if width else ""
    return GolombCodeword("0" * q + "1" + tail, k)


def _decode_one(bits: str, pos: int, k: int) -> tuple[int, int]:
    end = bits.find("1", pos)
    if end < 0:
        raise GolombDecodeError("unary quotient has no terminating 1 bit")
    q = end - pos
    width = remainder_bits(k)
    tail = bits[end + 1 : end + 1 + width]
    if len(tail) != width:
        raise GolombDecodeError("truncated remainder")
    r = int(tail, 2) if width else 0
    if r >= k:
        raise GolombDecodeError(f"remainder {r} out of range for K={k}")
    return q * k + r, end + 1 + width


def golomb_decode(bits: str, k: int) -> int:
    if k < 1:
        raise ValueError("K must be >= 1")
    if set(bits) - {"0", "1"}:
        raise GolombDecodeError("bitstream may contain only 0 and 1")
    value, end = _decode_one(bits, 0, k)
    if end != len(bits):
        raise GolombDecodeError(f"{len(bits) - end} trailing bits after codeword")
    return value


def golomb_decode_stream(bits: str, k: int, count: int) -> list[int]:
    values = []
    pos = 0
    for _ in range(count):
        v, pos = _decode_one(bits, pos, k)
        values.append(v)
    if pos != len(bits):
        raise GolombDecodeError("trailing bits after last codeword")
    return values


def code_length(value, k: int):
    """Codeword length(s) without building the bit strings."""
    v = np.asarray(value, dtype=np.int64)
    return v // k + 1 + remainder_bits(k)


def expected_length_bound(phi: float) -> float:
    """Upper bound on mean bits per truncated-geometric coordinate, plus the
    terminator bit."""
    k = golomb_parameter(phi)
    return k / (1.0 - phi) + math.log2(k) + 1.0
