"""Borda aggregation: centralized mean-position ranking and the federated
variant where each client sends quantized local averages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mallows import QuantTable, quantize
from .perm import PermutationError, argsort_to_ranking, as_rankings
from .secure_agg import borda_ring


@dataclass(frozen=True)
class BordaEstimate:
    estimate: np.ndarray
    server_averages: np.ndarray


@dataclass(frozen=True)
class BordaClientMessage:
    quantized: np.ndarray
    ring_modulus: int


def central_borda(rankings) -> BordaEstimate:
    """Rank items by their mean position over all rankings (ties: lower index first)."""
    rankings = as_rankings(rankings)
    averages = rankings.mean(axis=0)
    return BordaEstimate(argsort_to_ranking(averages), averages)


def client_borda_message(local, table: QuantTable, num_clients: int = 1) -> BordaClientMessage:
    """Quantize the client's mean positions to centroid indices.

    The local sample count is not part of the message.
    """
    local = np.asarray(local)
    if local.size == 0:
        raise ValueError("client has no rankings")
    local = as_rankings(local)
    if local.shape[1] != table.n:
        raise PermutationError(f"rankings have N={local.shape[1]}, table has N={table.n}")
    return BordaClientMessage(quantize(table, local.mean(axis=0)), borda_ring(table.n, num_clients))


def server_borda_aggregate(unmasked_sum, num_clients: int) -> BordaEstimate:
    sums = np.asarray(unmasked_sum, dtype=np.int64)
    n = sums.size
    if num_clients < 1:
        raise ValueError("need at least one client")
    if (sums < num_clients).any() or (sums > n * num_clients).any():
        raise ValueError(f"aggregated scores outside [{num_clients}, {n * num_clients}]: {sums.tolist()}")
    averages = sums / num_clients
    return BordaEstimate(argsort_to_ranking(averages), averages)
