"""Loading ranking datasets and splitting them into client shards.

File formats (all 1-indexed, comma separated):

rankings CSV
    one ranking per line, column i holds the position of item i; an optional
    leading non-numeric column is read as a group label.
scores CSV
    a header row of item names, then one row of real scores per individual;
    empty or ``NA``/``nan`` cells mark missing ratings.
ballot file
    one ballot per line listing item ids in preference order; blank marks are
    skipped and repeated marks keep their first occurrence.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .perm import PermutationError, TieRule, invert, partial_to_full, scores_to_ranking

MISSING = {"", "na", "nan", "null"}


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ClientDataset:
    """Ordered client shards; ``dropped`` counts rankings filtered out."""

    labels: tuple[str, ...]
    shards: tuple[np.ndarray, ...]
    dropped: int = 0
    report: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.shards):
            raise ValueError("labels and shards differ in length")
        if not self.shards:
            raise ValueError("a client dataset needs at least one client")
        widths = {s.shape[1] for s in self.shards}
        if len(widths) != 1:
            raise ValueError(f"clients disagree on N: {sorted(widths)}")
        if any(s.shape[0] == 0 for s in self.shards):
            raise ValueError("every client needs at least one ranking")

    @property
    def n(self) -> int:
        return int(self.shards[0].shape[1])

    @property
    def num_clients(self) -> int:
        return len(self.shards)

    @property
    def sizes(self) -> list[int]:
        return [int(s.shape[0]) for s in self.shards]

    def pooled(self) -> np.ndarray:
        return np.concatenate(self.shards, axis=0)

    def truncated(self, k: int) -> "ClientDataset":
        """Each client keeps only its first ``k`` rankings."""
        return ClientDataset(self.labels, tuple(s[:k] for s in self.shards), self.dropped, self.report)

    @classmethod
    def from_shards(cls, shards: Sequence[np.ndarray], labels: Sequence[str] | None = None) -> "ClientDataset":
        shards = tuple(np.asarray(s, dtype=np.int64) for s in shards)
        labels = tuple(labels) if labels is not None else tuple(f"client{k}" for k in range(len(shards)))
        return cls(labels, shards)


def _rows(path: str | Path) -> Iterable[tuple[int, list[str]]]:
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, [c.strip() for c in row]


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


def load_rankings_csv(path: str | Path, orders: bool = False) -> tuple[np.ndarray, list[str] | None]:
    """Rankings and, for labeled files, one group label per row.

    With ``orders=True`` each row lists item ids best-first and is inverted
    into item -> position form.
    """
    rankings: list[list[int]] = []
    labels: list[str] = []
    labeled: bool | None = None
    n = None
    for lineno, row in _rows(path):
        has_label = not _is_int(row[0])
        if labeled is None:
            labeled = has_label
        elif labeled != has_label:
            raise DataFormatError(f"{path}:{lineno}: mixes labeled and unlabeled rows")
        values = row[1:] if has_label else row
        try:
            perm = [int(v) for v in values]
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: non-integer entry ({exc})") from None
        if n is None:
            n = len(perm)
        elif len(perm) != n:
            raise DataFormatError(f"{path}:{lineno}: expected {n} items, got {len(perm)}")
        if sorted(perm) != list(range(1, n + 1)):
            raise DataFormatError(f"{path}:{lineno}: row is not a ranking of 1..{n}: {perm}")
        rankings.append(perm)
        if has_label:
            labels.append(row[0])
    if not rankings:
        raise DataFormatError(f"{path}: no rankings found")
    out = np.array(rankings, dtype=np.int64)
    if orders:
        out = invert(out)
    return out, (labels if labeled else None)


def save_rankings_csv(path: str | Path, rankings, labels: Sequence[str] | None = None) -> None:
    rankings = np.asarray(rankings, dtype=np.int64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for k, row in enumerate(rankings.tolist()):
            writer.writerow(([labels[k]] if labels is not None else []) + row)


def save_client_dataset(path: str | Path, data: ClientDataset) -> None:
    labels = [lab for lab, s in zip(data.labels, data.shards) for _ in range(s.shape[0])]
    save_rankings_csv(path, data.pooled(), labels)


@dataclass(frozen=True)
class ScoresTable:
    items: list[str]
    rankings: np.ndarray
    dropped: int


def load_scores_csv(path: str | Path, tie_rule: TieRule = "by_index",
                    rng: np.random.Generator | None = None) -> ScoresTable:
    """Convert score rows to rankings, dropping rows with missing ratings."""
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataFormatError(f"{path}: empty scores file") from None
    n = len(header)
    rankings = []
    dropped = 0
    for lineno, row in rows:
        if len(row) != n:
            raise DataFormatError(f"{path}:{lineno}: expected {n} scores, got {len(row)}")
        if any(c.lower() in MISSING for c in row):
            dropped += 1
            continue
        try:
            scores = [float(c) for c in row]
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
        if not all(math.isfinite(s) for s in scores):
            dropped += 1
            continue
        rankings.append(scores_to_ranking(scores, tie_rule, rng))
    if not rankings:
        raise DataFormatError(f"{path}: no complete score rows")
    return ScoresTable(header, np.array(rankings, dtype=np.int64), dropped)


def load_ballots(path: str | Path, n: int | None, rng: np.random.Generator) -> np.ndarray:
    """Complete partial ballots; unranked items fill the tail at random."""
    ballots: list[list[int]] = []
    for lineno, row in _rows(path):
        prefix: list[int] = []
        for cell in row:
            if not cell:
                continue
            if not _is_int(cell):
                raise DataFormatError(f"{path}:{lineno}: bad item id {cell!r}")
            item = int(cell)
            if item not in prefix:
                prefix.append(item)
        ballots.append(prefix)
    if not ballots:
        raise DataFormatError(f"{path}: no ballots found")
    if n is None:
        n = max((max(b) for b in ballots if b), default=0)
    out = np.empty((len(ballots), n), dtype=np.int64)
    for k, prefix in enumerate(ballots):
        try:
            out[k] = partial_to_full(prefix, n, rng)
        except PermutationError as exc:
            raise DataFormatError(f"{path}: ballot {k + 1}: {exc}") from None
    return out


Strategy = Literal["by_group", "random_shards"]


def partition_by_group(rankings, labels: Sequence[str], min_size: int = 1) -> ClientDataset:
    """One client per label, in first-appearance order; small groups are dropped."""
    rankings = np.asarray(rankings, dtype=np.int64)
    if rankings.shape[0] == 0:
        raise ValueError("no rankings to partition")
    if len(labels) != rankings.shape[0]:
        raise ValueError("need exactly one label per ranking")
    order: dict[str, list[int]] = {}
    for k, lab in enumerate(labels):
        order.setdefault(lab, []).append(k)
    kept = {lab: idx for lab, idx in order.items() if len(idx) >= min_size}
    dropped_groups = {lab: len(idx) for lab, idx in order.items() if len(idx) < min_size}
    if not kept:
        raise ValueError(f"no group has at least {min_size} rankings")
    return ClientDataset(
        tuple(kept),
        tuple(rankings[idx] for idx in kept.values()),
        dropped=sum(dropped_groups.values()),
        report={"strategy": "by_group", "min_size": min_size, "dropped_groups": dropped_groups},
    )


def partition_random(rankings, num_clients: int, seed: int) -> ClientDataset:
    """Seeded shuffle, then round-robin dealing into ``num_clients`` shards."""
    rankings = np.asarray(rankings, dtype=np.int64)
    m = rankings.shape[0]
    if m == 0:
        raise ValueError("no rankings to partition")
    if not 1 <= num_clients <= m:
        raise ValueError(f"cannot split {m} rankings into {num_clients} non-empty clients")
    order = np.random.default_rng(seed).permutation(m)
    shards = tuple(rankings[order[k::num_clients]] for k in range(num_clients))
    return ClientDataset(
        tuple(f"shard{k}" for k in range(num_clients)), shards,
        report={"strategy": "random_shards", "num_clients": num_clients, "seed": seed},
    )


def partition_clients(rankings, strategy: Strategy, *, labels: Sequence[str] | None = None,
                      min_size: int = 1, num_clients: int | None = None, seed: int = 0) -> ClientDataset:
    if strategy == "by_group":
        if labels is None:
            raise ValueError("by_group partitioning needs group labels")
        return partition_by_group(rankings, labels, min_size)
    if strategy == "random_shards":
        if num_clients is None:
            raise ValueError("random_shards partitioning needs num_clients")
        return partition_random(rankings, num_clients, seed)
    raise ValueError(f"unknown partition strategy {strategy!r}")
