"""Comparison aggregators (footrule matching, brute-force Kemeny) and the
Kemeny evaluation objective."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .perm import as_rankings, kendall_tau_many

KEMENY_MAX_N = 8


@dataclass(frozen=True)
class AssignmentProblem:
    cost: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.cost)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"assignment cost matrix must be square, got shape {c.shape}")
        object.__setattr__(self, "cost", c.astype(np.int64))


def _dual_potentials(cost: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row/column potentials certifying the optimal assignment ``cols``.

    Column potentials are shortest-path distances in the exchange graph where
    row i taking row k's column costs c[i, cols[k]] - c[i, cols[i]].
    """
    n = cost.shape[0]
    own = cost[np.arange(n), cols]
    w = cost[:, cols] - own[:, None]
    x = np.zeros(n, dtype=np.int64)
    for _ in range(n + 1):
        nxt = np.minimum(x, (x[:, None] + w).min(axis=0))
        if np.array_equal(nxt, x):
            break
        x = nxt
    else:
        raise RuntimeError("assignment is not optimal (negative exchange cycle)")
    v = np.empty(n, dtype=np.int64)
    v[cols] = x
    u = own - v[cols]
    return u, v


def _lex_smallest_matching(tight: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Lexicographically smallest perfect matching inside ``tight``, starting
    from the perfect matching ``cols``."""
    n = tight.shape[0]
    cols = cols.copy()
    row_of = np.empty(n, dtype=np.int64)
    row_of[cols] = np.arange(n)
    fixed_col = np.zeros(n, dtype=bool)
    adj = [np.flatnonzero(tight[i]) for i in range(n)]
    for i in range(n):
        for j in adj[i]:
            if j >= cols[i]:
                break
            if fixed_col[j]:
                continue
            # alternating path: row_of[j] must reach the column i gives up
            start = row_of[j]
            target = cols[i]
            # parent[r] = (row that takes r's column, that column)
            parent = {start: (-1, -1)}
            queue = deque([start])
            found = -1
            while queue and found < 0:
                r = queue.popleft()
                for c in adj[r]:
                    if fixed_col[c] or c == j or c == cols[r]:
                        continue
                    if c == target:
                        found = r
                        break
                    nr = row_of[c]
                    if nr not in parent:
                        parent[nr] = (r, c)
                        queue.append(nr)
            if found < 0:
                continue
            r, c = found, target
            while r != -1:
                cols[r] = c
                row_of[c] = r
                r, c = parent[r]
            cols[i] = j
            row_of[j] = i
            break
        fixed_col[cols[i]] = True
    return cols


def solve_assignment(problem: AssignmentProblem | np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-cost assignment (row -> column, 0-based) and its total cost.

    Among equal-cost optima the lexicographically smallest column vector is
    returned.
    """
    if not isinstance(problem, AssignmentProblem):
        problem = AssignmentProblem(problem)
    cost = problem.cost
    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0
    rows, cols = linear_sum_assignment(cost)
    cols = cols[np.argsort(rows)].astype(np.int64)
    u, v = _dual_potentials(cost, cols)
    tight = (u[:, None] + v[None, :]) == cost
    cols = _lex_smallest_matching(tight, cols)
    return cols, int(cost[np.arange(n), cols].sum())


def footrule_cost_matrix(rankings) -> np.ndarray:
    """cost[i, j] = sum over rankings of |position of item i - (j + 1)|."""
    rankings = as_rankings(rankings)
    m, n = rankings.shape
    hist = np.zeros((n, n), dtype=np.int64)
    np.add.at(hist, (np.tile(np.arange(n), m), rankings.reshape(-1) - 1), 1)
    pos = np.arange(n)
    dist = np.abs(pos[:, None] - pos[None, :])
    return hist @ dist


def footrule_aggregate(rankings) -> tuple[np.ndarray, int]:
    """Footrule-optimal ranking via bipartite matching, with its footrule cost."""
    cols, total = solve_assignment(footrule_cost_matrix(rankings))
    return cols + 1, total


def _all_rankings(n: int) -> np.ndarray:
    # itertools yields position vectors in lexicographic order
    return np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64)


def kemeny_bruteforce(rankings) -> np.ndarray:
    """Exact Kemeny consensus by enumeration; ties go to the lexicographically
    smallest ranking."""
    rankings = as_rankings(rankings)
    n = rankings.shape[1]
    if n > KEMENY_MAX_N:
        raise ValueError(f"brute-force Kemeny is limited to N <= {KEMENY_MAX_N}, got {n}")
    # ahead[a, b]: number of rankings placing a before b
    ahead = (rankings[:, :, None] < rankings[:, None, :]).sum(axis=0)
    cands = _all_rankings(n)
    before = cands[:, :, None] < cands[:, None, :]
    # a candidate placing a before b disagrees with every ranking placing b before a
    totals = (before * ahead.T[None, :, :]).sum(axis=(1, 2))
    return cands[int(np.argmin(totals))].copy()


def kemeny_objective(candidate, rankings) -> float:
    """Mean Kendall distance to the data, normalized by the number of items."""
    rankings = np.asarray(rankings, dtype=np.int64)
    if rankings.ndim == 1:
        rankings = rankings[None, :]
    if rankings.shape[0] == 0:
        raise ValueError("no rankings to evaluate against")
    m, n = rankings.shape
    return float(kendall_tau_many(candidate, rankings).sum()) / (m * n)
