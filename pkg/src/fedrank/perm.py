"""Permutation arithmetic, ranking distances and the Lehmer codec.

Conventions used throughout the package:

* A ranking of ``N`` items is a 1-indexed integer vector ``perm`` where
  ``perm[i]`` is the position (rank) of item ``i + 1``; rank 1 is best.
* A batch of rankings is a 2-D array of shape ``(M, N)``, one ranking per row.
* A Lehmer code ``code`` has ``code[i] = |{t < i : perm[t] > perm[i]}|`` so
  ``code[i]`` lies in ``{0, ..., i}`` when ``i`` is 0-based.
"""

from __future__ import annotations

from typing import Literal, Sequence

import numpy as np

TieRule = Literal["by_index", "seeded_random"]


class PermutationError(ValueError):
    """Raised when an input is not a valid ranking or Lehmer code."""


def as_permutation(values: Sequence[int] | np.ndarray) -> np.ndarray:
    """Validate ``values`` as a ranking and return it as a read-only int64 array."""
    perm = np.array(values, dtype=np.int64).reshape(-1)
    n = perm.size
    if n < 1:
        raise PermutationError("a ranking needs at least one item")
    seen = np.zeros(n + 1, dtype=bool)
    if perm.min() < 1 or perm.max() > n:
        raise PermutationError(f"ranking values must lie in 1..{n}: {perm.tolist()}")
    seen[perm] = True
    if not seen[1:].all():
        raise PermutationError(f"ranking is not a bijection: {perm.tolist()}")
    perm.flags.writeable = False
    return perm


def as_rankings(values) -> np.ndarray:
    """Validate a batch of rankings (shape ``(M, N)``)."""
    arr = np.array(values, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise PermutationError(f"expected a non-empty (M, N) array, got shape {arr.shape}")
    n = arr.shape[1]
    srt = np.sort(arr, axis=1)
    bad = np.flatnonzero((srt != np.arange(1, n + 1)).any(axis=1))
    if bad.size:
        raise PermutationError(f"row {bad[0]} is not a ranking of 1..{n}: {arr[bad[0]].tolist()}")
    return arr


def identity(n: int) -> np.ndarray:
    return as_permutation(np.arange(1, n + 1))


def _check_same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise PermutationError(f"length mismatch: {a.shape[-1]} vs {b.shape[-1]}")


def invert(perm) -> np.ndarray:
    """Inverse ranking: ``result[perm[i]] = i`` (both 1-indexed)."""
    perm = np.asarray(perm, dtype=np.int64)
    inv = np.zeros_like(perm)
    if perm.ndim == 1:
        inv[perm - 1] = np.arange(1, perm.size + 1)
    else:
        rows = np.arange(perm.shape[0])[:, None]
        inv[rows, perm - 1] = np.arange(1, perm.shape[1] + 1)
    return inv


def compose(outer, inner) -> np.ndarray:
    """``(outer o inner)(i) = outer(inner(i))``; broadcasts over leading axes of ``outer``."""
    outer = np.asarray(outer, dtype=np.int64)
    inner = np.asarray(inner, dtype=np.int64)
    return outer[..., inner - 1]


def kendall_tau(a, b) -> int:
    """Number of item pairs ordered oppositely by ``a`` and ``b``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_same_length(a, b)
    # inversions of b o a^{-1} equal the discordant pairs of (a, b)
    return int(lehmer_encode(compose(b, invert(a))).sum())


def kendall_tau_many(candidate, rankings, chunk: int = 2048) -> np.ndarray:
    """Kendall distances from ``candidate`` to every row of ``rankings``."""
    candidate = np.asarray(candidate, dtype=np.int64)
    rankings = np.asarray(rankings, dtype=np.int64)
    if rankings.ndim == 1:
        rankings = rankings[None, :]
    _check_same_length(candidate, rankings)
    relabeled = compose(rankings, invert(candidate))
    out = np.empty(rankings.shape[0], dtype=np.int64)
    for start in range(0, rankings.shape[0], chunk):
        out[start : start + chunk] = lehmer_encode_batch(relabeled[start : start + chunk]).sum(axis=1)
    return out


def spearman_footrule(a, b) -> int:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_same_length(a, b)
    return int(np.abs(a - b).sum())


class _Fenwick:
    """Binary indexed tree over 1..n holding counts."""

    def __init__(self, n: int) -> None:
        self.n = n
        self.tree = [0] * (n + 1)
        self.log = 1 << (n.bit_length() - 1) if n else 0

    def add(self, i: int, delta: int) -> None:
        while i <= self.n:
            self.tree[i] += delta
            i += i & -i

    def prefix(self, i: int) -> int:
        s = 0
        while i > 0:
            s += self.tree[i]
            i -= i & -i
        return s

    def kth(self, k: int) -> int:
        """Smallest index whose prefix count reaches ``k``."""
        pos = 0
        step = self.log
        while step:
            nxt = pos + step
            if nxt <= self.n and self.tree[nxt] < k:
                pos = nxt
                k -= self.tree[nxt]
            step >>= 1
        return pos + 1


def lehmer_encode(perm) -> np.ndarray:
    """Lehmer code of a single ranking in O(N log N)."""
    perm = np.asarray(perm, dtype=np.int64)
    n = perm.size
    tree = _Fenwick(n)
    code = np.empty(n, dtype=np.int64)
    for i, rank in enumerate(perm.tolist()):
        # earlier items with a larger rank value are ranked worse
        code[i] = i - tree.prefix(rank)
        tree.add(rank, 1)
    return code


def lehmer_decode(code) -> np.ndarray:
    """Inverse of :func:`lehmer_encode`."""
    code = np.asarray(code, dtype=np.int64).reshape(-1)
    n = code.size
    idx = np.arange(n)
    if n == 0 or (code < 0).any() or (code > idx).any():
        raise PermutationError(f"invalid Lehmer code: {code.tolist()}")
    tree = _Fenwick(n)
    for r in range(1, n + 1):
        tree.add(r, 1)
    perm = np.empty(n, dtype=np.int64)
    # item i (1-based) holds relative rank i - code among items 1..i;
    # items after it have already claimed their ranks
    for i in range(n - 1, -1, -1):
        rank = tree.kth(i + 1 - int(code[i]))
        perm[i] = rank
        tree.add(rank, -1)
    return perm


def lehmer_encode_batch(perms) -> np.ndarray:
    """Row-wise Lehmer codes of an ``(M, N)`` batch (vectorized, O(M N^2))."""
    perms = np.asarray(perms, dtype=np.int64)
    m, n = perms.shape
    code = np.zeros((m, n), dtype=np.int64)
    for i in range(1, n):
        code[:, i] = (perms[:, :i] > perms[:, i : i + 1]).sum(axis=1)
    return code


def lehmer_decode_batch(codes) -> np.ndarray:
    """Row-wise inverse of :func:`lehmer_encode_batch`."""
    codes = np.asarray(codes, dtype=np.int64)
    m, n = codes.shape
    if (codes < 0).any() or (codes > np.arange(n)).any():
        raise PermutationError("invalid Lehmer code in batch")
    perms = np.zeros((m, n), dtype=np.int64)
    for i in range(n):
        rank = (i + 1 - codes[:, i])[:, None]
        head = perms[:, :i]
        head += head >= rank
        perms[:, i] = rank[:, 0]
    return perms


def relabel_displacement(perm, centroid) -> np.ndarray:
    """Displacement vector of ``perm`` relative to ``centroid``.

    Entry ``i`` counts the items placed before position ``i`` by the centroid
    that ``perm`` ranks after the centroid's ``i``-th item. Equals the Lehmer
    code of ``perm`` when the centroid is the identity.
    """
    perm = np.asarray(perm, dtype=np.int64)
    centroid = np.asarray(centroid, dtype=np.int64)
    _check_same_length(perm, centroid)
    relabeled = compose(perm, invert(centroid))
    if relabeled.ndim == 1:
        return lehmer_encode(relabeled)
    return lehmer_encode_batch(relabeled)


def argsort_to_ranking(values, tiebreak=None) -> np.ndarray:
    """Rank items by increasing ``values``; ties go to the smaller item index
    unless a secondary ``tiebreak`` key is supplied."""
    values = np.asarray(values, dtype=float)
    if tiebreak is None:
        order = np.argsort(values, kind="stable")
    else:
        order = np.lexsort((tiebreak, values))
    ranking = np.empty(values.size, dtype=np.int64)
    ranking[order] = np.arange(1, values.size + 1)
    return ranking


def scores_to_ranking(scores, tie_rule: TieRule = "by_index", rng: np.random.Generator | None = None) -> np.ndarray:
    """Convert per-item scores to a ranking; a higher score earns a better rank."""
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if scores.size < 1:
        raise PermutationError("need at least one score")
    if not np.isfinite(scores).all():
        raise PermutationError("scores must be finite")
    if tie_rule == "by_index":
        return argsort_to_ranking(-scores)
    if tie_rule == "seeded_random":
        if rng is None:
            raise ValueError("seeded_random tie rule needs an rng")
        return argsort_to_ranking(-scores, tiebreak=rng.random(scores.size))
    raise ValueError(f"unknown tie rule {tie_rule!r}")


def partial_to_full(ranked_prefix: Sequence[int], n: int, rng: np.random.Generator) -> np.ndarray:
    """Complete a top-k ballot: the prefix keeps its order at the top and the
    unranked items fill the remaining positions uniformly at random."""
    prefix = [int(x) for x in ranked_prefix]
    if len(set(prefix)) != len(prefix):
        raise PermutationError(f"duplicate item in ballot prefix {prefix}")
    if any(x < 1 or x > n for x in prefix):
        raise PermutationError(f"ballot item out of range 1..{n}: {prefix}")
    perm = np.zeros(n, dtype=np.int64)
    perm[np.array(prefix, dtype=np.int64) - 1] = np.arange(1, len(prefix) + 1)
    rest = np.flatnonzero(perm == 0)
    perm[rest] = len(prefix) + 1 + rng.permutation(rest.size)
    return perm
