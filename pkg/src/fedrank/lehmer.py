"""Federated Lehmer-code majority aggregation.

Each client reduces its rankings to the coordinate-wise majority ``v`` of their
Lehmer codes and splits every coordinate into a high part (averaged by the
server) and the low ``I`` bits (sent as a one-hot histogram vector and voted on
by the server).

Wire layout per client, coordinate by coordinate: the high part (only when the
coordinate has high bits) followed by the ``2**I`` histogram entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .perm import PermutationError, as_rankings, lehmer_decode, lehmer_encode_batch
from .secure_agg import lehmer_high_widths

HIGH, HIST = 0, 1


def full_widths(n: int) -> np.ndarray:
    """ceil(log2 i) for i = 1..N: bits needed for coordinate i's values 0..i-1."""
    return np.array([int(i - 1).bit_length() for i in range(1, n + 1)], dtype=np.int64)


def truncation_bits(total_samples: int, n: int, epsilon: float, p: float, clamp: bool = True) -> int:
    """Number of low bits voted by histogram.

    All logarithms are base 2. The result is at least 1 and, when ``clamp``,
    at most ceil(log2 N).
    """
    if total_samples < 1:
        raise ValueError("total_samples must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < p < 1.0:
        raise ValueError(f"displacement ratio p={p} must lie in (0, 1); "
                         "the model needs phi + phi^2 < 1 + phi^N")
    spread = 2.0 * math.log2(total_samples * n * n / epsilon) / math.log2(1.0 / p) + 1.0
    bits = max(1, math.ceil(math.log2(spread)))
    if clamp:
        bits = min(bits, max(1, int(n - 1).bit_length()))
    return bits


def coordinate_majority(codes, rng: np.random.Generator | None = None) -> np.ndarray:
    """Most frequent value per column; ties drawn uniformly with ``rng`` or, if
    no rng is given, resolved to the smallest value."""
    codes = np.asarray(codes, dtype=np.int64)
    m, n = codes.shape
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        counts = np.bincount(codes[:, i], minlength=i + 1)
        best = np.flatnonzero(counts == counts.max())
        out[i] = best[0] if rng is None or best.size == 1 else rng.choice(best)
    return out


@dataclass(frozen=True)
class LehmerSplitMessage:
    """Unmasked client message: high parts (N,) and one-hot low parts (N, 2**I)."""

    high: np.ndarray
    hist: np.ndarray
    trunc_bits: int

    @property
    def n(self) -> int:
        return int(self.high.size)

    def values(self) -> np.ndarray:
        return (self.high << self.trunc_bits) + self.hist.argmax(axis=1)


def split_message(v, trunc_bits: int) -> LehmerSplitMessage:
    v = np.asarray(v, dtype=np.int64)
    n = v.size
    if (v < 0).any() or (v > np.arange(n)).any():
        raise PermutationError(f"not a Lehmer code: {v.tolist()}")
    low = v & ((1 << trunc_bits) - 1)
    hist = np.zeros((n, 1 << trunc_bits), dtype=np.int64)
    hist[np.arange(n), low] = 1
    return LehmerSplitMessage(v >> trunc_bits, hist, trunc_bits)


def client_lehmer_message(local, trunc_bits: int, rng: np.random.Generator | None = None) -> LehmerSplitMessage:
    local = np.asarray(local)
    if local.size == 0:
        raise ValueError("client has no rankings")
    codes = lehmer_encode_batch(as_rankings(local))
    return split_message(coordinate_majority(codes, rng), trunc_bits)


def lehmer_layout(n: int, num_clients: int, trunc_bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Ring moduli and part kinds (HIGH / HIST) of the flattened message."""
    widths = lehmer_high_widths(n, trunc_bits)
    size = 1 << trunc_bits
    has_high = widths > 0
    # coordinate block i: optional high entry, then the histogram
    block = has_high.astype(np.int64) + size
    starts = np.concatenate(([0], np.cumsum(block)[:-1]))
    moduli = np.full(int(block.sum()), num_clients + 1, dtype=np.int64)
    kinds = np.full(moduli.size, HIST, dtype=np.int64)
    # widened by L so the server recovers the exact integer sum
    moduli[starts[has_high]] = num_clients << widths[has_high]
    kinds[starts[has_high]] = HIGH
    return moduli, kinds


def flatten_message(msg: LehmerSplitMessage) -> np.ndarray:
    widths = lehmer_high_widths(msg.n, msg.trunc_bits)
    parts = []
    for i, w in enumerate(widths.tolist()):
        if w > 0:
            parts.append(msg.high[i : i + 1])
        parts.append(msg.hist[i])
    return np.concatenate(parts).astype(np.int64)


def unflatten_sum(flat, n: int, trunc_bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a flattened (summed) vector back into high sums and histograms."""
    flat = np.asarray(flat, dtype=np.int64)
    widths = lehmer_high_widths(n, trunc_bits)
    size = 1 << trunc_bits
    expected = int((widths > 0).sum()) + n * size
    if flat.size != expected:
        raise ValueError(f"layout mismatch: got {flat.size} entries, expected {expected}")
    high = np.zeros(n, dtype=np.int64)
    hist = np.empty((n, size), dtype=np.int64)
    pos = 0
    for i, w in enumerate(widths.tolist()):
        if w > 0:
            high[i] = flat[pos]
            pos += 1
        hist[i] = flat[pos : pos + size]
        pos += size
    return high, hist


def server_lehmer_aggregate(summed_high, summed_hist, num_clients: int, trunc_bits: int) -> np.ndarray:
    """Reconstruct the consensus Lehmer code and decode it to a ranking."""
    high = np.asarray(summed_high, dtype=np.int64)
    hist = np.asarray(summed_hist, dtype=np.int64)
    n = high.size
    if hist.shape != (n, 1 << trunc_bits):
        raise ValueError(f"histogram shape {hist.shape} does not match N={n}, I={trunc_bits}")
    col = hist.sum(axis=1)
    if (col != num_clients).any():
        i = int(np.flatnonzero(col != num_clients)[0])
        raise ValueError(f"coordinate {i + 1}: histogram sums to {col[i]}, expected {num_clients}")
    # closest integer to high / L, halves rounded up
    avg_high = (2 * high + num_clients) // (2 * num_clients)
    maj_low = hist.argmax(axis=1)
    code = (avg_high << trunc_bits) + maj_low
    code = np.clip(code, 0, np.arange(n))
    return lehmer_decode(code)
