"""Mallows model: exact sampling, pmf, the displacement ratio and the Borda
quantization table of expected positions."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .perm import (
    PermutationError,
    as_permutation,
    compose,
    identity,
    kendall_tau,
    lehmer_decode_batch,
    lehmer_encode_batch,
)

EXACT_MAX_N = 8
MC_DEFAULT_SAMPLES = 100_000


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must lie in (0, 1), got {phi}")
    return phi


@dataclass(frozen=True)
class MallowsParams:
    phi: float
    centroid: np.ndarray

    def __post_init__(self) -> None:
        _check_phi(self.phi)
        object.__setattr__(self, "centroid", as_permutation(self.centroid))

    @property
    def n(self) -> int:
        return int(self.centroid.size)

    @classmethod
    def identity(cls, n: int, phi: float) -> "MallowsParams":
        return cls(phi, identity(n))


def log_normalization(n: int, phi: float) -> float:
    """log Z, one truncated geometric series per insertion step."""
    phi = _check_phi(phi)
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(1, n + 1)
    # sum_{j<i} phi^j = (1 - phi^i) / (1 - phi)
    return float(np.sum(np.log1p(-(phi**i))) - n * math.log1p(-phi))


def normalization_Z(n: int, phi: float) -> float:
    return math.exp(log_normalization(n, phi))


def log_pmf(params: MallowsParams, perm) -> float:
    perm = np.asarray(perm, dtype=np.int64)
    if perm.size != params.n:
        raise PermutationError(f"length mismatch: {perm.size} vs {params.n}")
    d = kendall_tau(params.centroid, perm)
    return d * math.log(params.phi) - log_normalization(params.n, params.phi)


def pmf(params: MallowsParams, perm) -> float:
    return math.exp(log_pmf(params, perm))


def sample_truncated_geometric(i: int, phi: float, rng: np.random.Generator, size=None):
    """Inverse-CDF draw from P(j) proportional to phi**j on {0, ..., i-1}.

    ``i`` may be an array to draw several coordinates at once (broadcast with
    ``size``).
    """
    phi = _check_phi(phi)
    i_arr = np.asarray(i, dtype=np.int64)
    if (i_arr < 1).any():
        raise ValueError("support size i must be >= 1")
    shape = size if size is not None else i_arr.shape
    u = rng.random(shape)
    # CDF(j) = (1 - phi^(j+1)) / (1 - phi^i); solve CDF(j) > u for the smallest j
    tail = np.log1p(-u * (1.0 - phi ** i_arr.astype(float)))
    j = np.floor(tail / math.log(phi)).astype(np.int64)
    j = np.clip(j, 0, i_arr - 1)
    if size is None and j.ndim == 0:
        return int(j)
    return j


def sample_displacements(n: int, phi: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent displacement vectors, shape ``(size, n)``."""
    return sample_truncated_geometric(np.arange(1, n + 1), phi, rng, size=(size, n))


def sample(params: MallowsParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Exact Mallows draws by repeated insertion.

    Returns one ranking, or a ``(size, N)`` batch when ``size`` is given.
    """
    m = 1 if size is None else int(size)
    codes = sample_displacements(params.n, params.phi, m, rng)
    relative = lehmer_decode_batch(codes)
    # relative(t) is the rank of the centroid's t-th item
    perms = compose(relative, params.centroid)
    return perms[0] if size is None else perms


def displacement_p(n: int, phi: float) -> tuple[float, bool]:
    """Displacement ratio p and whether phi + phi^2 < 1 + phi^N holds."""
    phi = _check_phi(phi)
    if n < 2:
        raise ValueError("n must be >= 2")
    num = sum(phi**u for u in range(1, n))
    den = 1.0 + sum(phi**u for u in range(3, n + 1))
    return num / den, phi + phi**2 < 1.0 + phi**n


@dataclass(frozen=True)
class QuantTable:
    """Quantization centroids (expected positions) and midpoint thresholds."""

    n: int
    phi: float
    centroids: np.ndarray
    method: str
    num_samples: int = 0
    stderr: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        c = np.array(self.centroids, dtype=float)
        if c.shape != (self.n,):
            raise ValueError(f"expected {self.n} centroids, got shape {c.shape}")
        if not np.isfinite(c).all() or (np.diff(c) < 0).any():
            raise ValueError("centroids must be finite and non-decreasing")
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)

    @property
    def thresholds(self) -> np.ndarray:
        return (self.centroids[:-1] + self.centroids[1:]) / 2.0

    def quantize(self, value):
        return quantize(self, value)


def quantize(table: QuantTable, value):
    """Index (1-based) of the nearest centroid; a value exactly on a threshold
    goes to the smaller index."""
    v = np.asarray(value, dtype=float)
    if not np.isfinite(v).all():
        raise ValueError("cannot quantize a non-finite value")
    idx = np.searchsorted(table.thresholds, v, side="left") + 1
    return int(idx) if idx.ndim == 0 else idx.astype(np.int64)


def _mahonian_position_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts of permutations and position sums grouped by inversion number."""
    kmax = n * (n - 1) // 2
    counts = np.zeros(kmax + 1, dtype=np.int64)
    sums = np.zeros((kmax + 1, n), dtype=np.int64)
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64)
    inv = lehmer_encode_batch(perms).sum(axis=1)
    np.add.at(counts, inv, 1)
    np.add.at(sums, inv, perms)
    return counts, sums


def expected_positions_exact(n: int, phi: float) -> QuantTable:
    """E[sigma(i)] under the identity-centred model by full enumeration."""
    phi = _check_phi(phi)
    if not 1 <= n <= EXACT_MAX_N:
        raise ValueError(f"exact enumeration supports 1 <= N <= {EXACT_MAX_N}, got {n}")
    counts, sums = _mahonian_position_tables(n)
    w = phi ** np.arange(counts.size)
    return QuantTable(n, phi, (w @ sums) / (w @ counts), "exact")


def expected_positions_mc(n: int, phi: float, num_samples: int, rng: np.random.Generator,
                          batch: int = 50_000) -> QuantTable:
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    params = MallowsParams.identity(n, phi)
    total = np.zeros(n)
    total_sq = np.zeros(n)
    done = 0
    while done < num_samples:
        k = min(batch, num_samples - done)
        draws = sample(params, rng, size=k).astype(float)
        total += draws.sum(axis=0)
        total_sq += (draws**2).sum(axis=0)
        done += k
    mean = total / num_samples
    var = np.maximum(total_sq / num_samples - mean**2, 0.0)
    stderr = np.sqrt(var / max(num_samples - 1, 1))
    return QuantTable(n, phi, mean, "mc", num_samples, stderr)


class RecursionValidationError(RuntimeError):
    """The recursive centroid table disagrees with exact enumeration."""


def pairwise_inversion_probs(n: int, phi: float) -> np.ndarray:
    """``g[d]``: probability that two items d apart in the centroid appear in
    swapped order (index 0 unused)."""
    phi = _check_phi(phi)
    g = np.zeros(max(n, 2))
    g[1] = phi / (1.0 + phi)
    for i in range(2, n):
        num = phi**i + sum(phi**j for j in range(1, i)) * g[i - 1]
        den = sum(phi**j for j in range(0, i + 1))
        g[i] = num / den
    return g[:n]


def _expected_positions_from_recursion(n: int, phi: float) -> np.ndarray:
    g = pairwise_inversion_probs(n, phi)
    e = np.empty(n)
    # sigma(i) = 1 + #items ranked ahead of i
    e[0] = 1.0 + g[1:n].sum()
    for i in range(1, n):
        # item i+1 moves down unless it jumps ahead of item 1; item i moves down
        # past item N only by an inversion at distance N - i
        e[i] = e[i - 1] + 1.0 - g[i] - g[n - i]
    return e


def expected_positions_recursive(n: int, phi: float, tol: float = 1e-12,
                                 validate_n: int | None = None) -> QuantTable:
    """Expected positions from the pairwise-inversion recursion.

    The recursion is checked against exact enumeration at
    ``min(n, EXACT_MAX_N)`` (or ``validate_n``) before its output is returned.
    """
    phi = _check_phi(phi)
    if n < 1:
        raise ValueError("n must be >= 1")
    check_n = min(n, EXACT_MAX_N) if validate_n is None else validate_n
    exact = expected_positions_exact(check_n, phi).centroids
    got = _expected_positions_from_recursion(check_n, phi)
    err = float(np.max(np.abs(exact - got)))
    if err > tol:
        raise RecursionValidationError(f"recursion off by {err:.3g} at N={check_n}, phi={phi}")
    e = got if check_n == n else _expected_positions_from_recursion(n, phi)
    return QuantTable(n, phi, e, "recursive")


def quant_table(n: int, phi: float, rng: np.random.Generator | None = None,
                num_samples: int = MC_DEFAULT_SAMPLES) -> QuantTable:
    """Table by provenance policy: exact for small N, validated recursion
    otherwise, Monte Carlo if the recursion fails its check."""
    if n <= EXACT_MAX_N:
        return expected_positions_exact(n, phi)
    try:
        return expected_positions_recursive(n, phi)
    except RecursionValidationError:
        rng = rng if rng is not None else np.random.default_rng(0)
        return expected_positions_mc(n, phi, num_samples, rng)


def save_table(table: QuantTable, path: str | Path) -> None:
    lines = [f"{table.n} {table.phi!r} {table.method} {table.num_samples}"]
    lines += [repr(float(x)) for x in table.centroids]
    Path(path).write_text("\n".join(lines) + "\n")


def load_table(path: str | Path) -> QuantTable:
    rows = Path(path).read_text().split("\n")
    head = rows[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: bad header {rows[0]!r}")
    n, phi, method, num = int(head[0]), float(head[1]), head[2], int(head[3])
    values = [float(r) for r in rows[1:] if r.strip()]
    return QuantTable(n, phi, np.array(values), method, num)


def cached_table(n: int, phi: float, cache_dir: str | Path | None = None,
                 rng: np.random.Generator | None = None) -> QuantTable:
    """:func:`quant_table` memoised on disk, keyed by ``(n, phi)``."""
    if cache_dir is None:
        return quant_table(n, phi, rng)
    path = Path(cache_dir) / f"centroids_N{n}_phi{phi!r}.txt"
    if path.exists():
        return load_table(path)
    table = quant_table(n, phi, rng)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_table(table, path)
    return table
