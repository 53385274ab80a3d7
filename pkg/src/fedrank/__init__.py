"""Federated rank aggregation under the Mallows model."""

from __future__ import annotations

from .baselines import footrule_aggregate, kemeny_bruteforce, kemeny_objective, solve_assignment
from .borda import central_borda, client_borda_message, server_borda_aggregate
from .data import ClientDataset, load_ballots, load_rankings_csv, load_scores_csv, partition_clients
from .harness import ExperimentConfig, ProtocolParams, run_experiment_sweep, run_federated_round
from .lehmer import client_lehmer_message, server_lehmer_aggregate, truncation_bits
from .mallows import MallowsParams, QuantTable, quant_table, sample
from .perm import kendall_tau, lehmer_decode, lehmer_encode, spearman_footrule
from .secure_agg import CostLedger, deal_masks, mask, tally_cost, unmask_sum

__version__ = "0.1.0"

__all__ = [
    "ClientDataset", "CostLedger", "ExperimentConfig", "MallowsParams", "ProtocolParams", "QuantTable",
    "central_borda", "client_borda_message", "client_lehmer_message", "deal_masks", "footrule_aggregate",
    "kemeny_bruteforce", "kemeny_objective", "kendall_tau", "lehmer_decode", "lehmer_encode",
    "load_ballots", "load_rankings_csv", "load_scores_csv", "mask", "partition_clients", "quant_table",
    "run_experiment_sweep", "run_federated_round", "sample", "server_borda_aggregate",
    "server_lehmer_aggregate", "solve_assignment", "spearman_footrule", "tally_cost", "truncation_bits",
    "unmask_sum",
]
