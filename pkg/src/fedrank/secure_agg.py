"""Zero-sum masking over integer rings and communication-cost accounting.

Masks come from a simulated trusted dealer: one generator produces every
client's mask so that the masks sum to zero modulo each coordinate's ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class LayoutError(ValueError):
    pass


def ring_bits(modulus) -> np.ndarray:
    """Bits needed to send one element of Z_q, per coordinate."""
    q = np.asarray(modulus, dtype=np.int64)
    # ceil(log2 q) == (q - 1).bit_length(); layouts repeat few distinct moduli
    uniq, inv = np.unique(q, return_inverse=True)
    bits = np.array([int(x - 1).bit_length() for x in uniq], dtype=np.int64)
    return bits[inv].reshape(q.shape)


def _moduli(moduli) -> np.ndarray:
    q = np.asarray(moduli, dtype=np.int64).reshape(-1)
    if (q < 2).any():
        raise LayoutError("every ring modulus must be >= 2")
    return q


def deal_masks(num_clients: int, moduli, rng: np.random.Generator) -> np.ndarray:
    """Masks of shape ``(L, D)`` summing to zero modulo ``moduli`` column-wise."""
    if num_clients < 2:
        raise ValueError("masking needs at least two clients")
    q = _moduli(moduli)
    masks = np.empty((num_clients, q.size), dtype=np.int64)
    masks[:-1] = rng.integers(0, q, size=(num_clients - 1, q.size))
    masks[-1] = np.mod(-masks[:-1].sum(axis=0), q)
    return masks


def mask(message, mask_vec, moduli) -> np.ndarray:
    msg = np.asarray(message, dtype=np.int64).reshape(-1)
    z = np.asarray(mask_vec, dtype=np.int64).reshape(-1)
    q = _moduli(moduli)
    if not msg.size == z.size == q.size:
        raise LayoutError(f"layout mismatch: message {msg.size}, mask {z.size}, moduli {q.size}")
    if (msg < 0).any() or (msg >= q).any():
        bad = int(np.flatnonzero((msg < 0) | (msg >= q))[0])
        raise ValueError(f"message coordinate {bad} = {msg[bad]} outside Z_{q[bad]}")
    return np.mod(msg + z, q)


def unmask_sum(masked_messages, moduli) -> np.ndarray:
    """Server-side sum of masked messages, reduced modulo each ring."""
    x = np.asarray(masked_messages, dtype=np.int64)
    q = _moduli(moduli)
    if x.ndim != 2 or x.shape[1] != q.size:
        raise LayoutError(f"layout mismatch: got {x.shape}, expected (L, {q.size})")
    return np.mod(x.sum(axis=0), q)


def borda_ring(n: int, num_clients: int) -> int:
    """Smallest power of two exceeding N*L, so coordinate sums never wrap."""
    return 1 << (n * num_clients).bit_length()


def lehmer_high_widths(n: int, trunc_bits: int) -> np.ndarray:
    """Per-coordinate bit width of the averaged (high) part."""
    full = np.array([int(i - 1).bit_length() for i in range(1, n + 1)], dtype=np.int64)
    return np.maximum(full - trunc_bits, 0)


@dataclass(frozen=True)
class CostLedger:
    """Exact bits sent per round; ``reference_bits`` is the idealized
    closed-form count reported for comparison."""

    protocol: str
    num_clients: int
    per_client_bits: int
    breakdown: dict[str, int]
    reference_bits: float | None = None
    notes: dict[str, str] = field(default_factory=dict)

    @property
    def total_bits(self) -> int:
        return self.per_client_bits * self.num_clients

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "num_clients": self.num_clients,
            "per_client_bits": self.per_client_bits,
            "total_bits": self.total_bits,
            "breakdown": dict(self.breakdown),
            "reference_bits": self.reference_bits,
            "notes": dict(self.notes),
        }


def lehmer_reference_bits(n: int, num_clients: int, total_samples: int, epsilon: float, p: float) -> float:
    """Idealized closed-form cost of the Lehmer protocol (base-2 logs)."""
    spread = 2.0 * math.log2(total_samples * n * n / epsilon) / math.log2(1.0 / p) + 1.0
    return num_clients * (n * (math.log2(n) - math.log2(spread)) + spread * math.log2(num_clients))


def tally_cost(protocol: str, n: int, num_clients: int, trunc_bits: int | None = None,
               moduli=None, *, total_samples: int | None = None, epsilon: float | None = None,
               p: float | None = None) -> CostLedger:
    """Exact bit count of one round of the implemented protocol.

    ``moduli`` (the flattened per-client ring layout) overrides the default
    layout when given; the Lehmer protocol needs ``trunc_bits``.
    """
    if protocol == "borda":
        q = np.full(n, borda_ring(n, num_clients)) if moduli is None else _moduli(moduli)
        bits = int(ring_bits(q).sum())
        return CostLedger(
            "borda", num_clients, bits, {"scores": bits},
            reference_bits=n * num_clients * math.log2(n) if n > 1 else 0.0,
            notes={"ring": f"Z_{int(q.max())} per coordinate"},
        )
    if protocol == "lehmer":
        if trunc_bits is None:
            raise ValueError("lehmer cost needs trunc_bits")
        from .lehmer import lehmer_layout

        default_moduli, kinds = lehmer_layout(n, num_clients, trunc_bits)
        moduli = default_moduli if moduli is None else moduli
        widths = ring_bits(_moduli(moduli))
        high = int(widths[kinds == 0].sum())
        hist = int(widths[kinds == 1].sum())
        reference = None
        if total_samples is not None and epsilon is not None and p is not None and 0 < p < 1 and num_clients > 1:
            reference = lehmer_reference_bits(n, num_clients, total_samples, epsilon, p)
        return CostLedger(
            "lehmer", num_clients, high + hist, {"high": high, "histogram": hist},
            reference_bits=reference,
            notes={
                "high_ring": "Z_{L*2^w} per coordinate with w > 0 high bits",
                "histogram_ring": f"Z_{num_clients + 1}",
            },
        )
    raise ValueError(f"unknown protocol {protocol!r}")
