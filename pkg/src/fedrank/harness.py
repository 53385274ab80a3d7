"""End-to-end federated rounds and experiment sweeps.

Every random draw comes from a stream derived from ``(master seed, purpose,
grid point, trial, client)`` so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import baselines, borda, lehmer, mallows
from .data import ClientDataset, load_ballots, load_rankings_csv, load_scores_csv, partition_clients
from .perm import as_permutation, kendall_tau, lehmer_decode, lehmer_encode_batch
from .secure_agg import CostLedger, deal_masks, mask, tally_cost, unmask_sum

log = logging.getLogger(__name__)

METHODS = ("borda_central", "borda_fra", "lehmer_central", "lehmer_fra", "footrule", "kemeny_bruteforce")
FEDERATED = ("borda_fra", "lehmer_fra")

# stream purposes
_DATA, _CLIENT, _MASK, _CENTROID = 1, 2, 3, 4


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolParams:
    phi: float = 0.6
    epsilon: float = 0.05
    total_samples: int | None = None
    trunc_bits: int | None = None
    mask: bool = True
    table: mallows.QuantTable | None = None
    cache_dir: str | None = None


@dataclass
class FRAReport:
    method: str
    estimate: np.ndarray
    metrics: dict[str, float]
    cost: CostLedger | None
    config: dict[str, Any] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)
    trials: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "estimate": [int(x) for x in self.estimate],
            "metrics": self.metrics,
            "cost": self.cost.to_dict() if self.cost is not None else None,
            "config": self.config,
            "metadata": self.metadata,
            "trials": self.trials,
        }


def secure_sum(messages: np.ndarray, moduli: np.ndarray, rng: np.random.Generator, use_mask: bool) -> np.ndarray:
    """Sum of client messages as the server sees it.

    With masking on (and at least two clients) the server only ever handles
    masked vectors; the mask-free path is a debugging reference.
    """
    messages = np.asarray(messages, dtype=np.int64)
    if not use_mask or messages.shape[0] < 2:
        return messages.sum(axis=0)
    masks = deal_masks(messages.shape[0], moduli, rng)
    masked = np.stack([mask(m, z, moduli) for m, z in zip(messages, masks)])
    return unmask_sum(masked, moduli)


def _borda_fra(clients: ClientDataset, params: ProtocolParams, mask_rng) -> tuple[np.ndarray, CostLedger, dict]:
    n, num = clients.n, clients.num_clients
    table = params.table or mallows.cached_table(n, params.phi, params.cache_dir)
    if table.n != n:
        raise ExperimentError(f"quantization table has N={table.n}, data has N={n}")
    msgs = []
    for k, shard in enumerate(clients.shards):
        try:
            msgs.append(borda.client_borda_message(shard, table, num).quantized)
        except ValueError as exc:
            raise ExperimentError(f"client {clients.labels[k]}: {exc}") from exc
    q = borda.borda_ring(n, num)
    moduli = np.full(n, q, dtype=np.int64)
    total = secure_sum(np.stack(msgs), moduli, mask_rng, params.mask)
    est = borda.server_borda_aggregate(total, num).estimate
    meta = {"ring": f"Z_{q}", "table_method": table.method}
    return est, tally_cost("borda", n, num, moduli=moduli), meta


def lehmer_trunc_bits(n: int, total_samples: int, params: ProtocolParams) -> int:
    if params.trunc_bits is not None:
        return int(params.trunc_bits)
    if n < 2:
        return 1
    p, ok = mallows.displacement_p(n, params.phi)
    if not ok:
        raise ExperimentError(f"phi={params.phi} violates phi + phi^2 < 1 + phi^N for N={n}; "
                              "set truncation bits explicitly")
    return lehmer.truncation_bits(total_samples, n, params.epsilon, p)


def _lehmer_fra(clients: ClientDataset, params: ProtocolParams, client_rngs, mask_rng):
    n, num = clients.n, clients.num_clients
    m_public = params.total_samples or sum(clients.sizes)
    bits = lehmer_trunc_bits(n, m_public, params)
    moduli, _ = lehmer.lehmer_layout(n, num, bits)
    flat = []
    for k, shard in enumerate(clients.shards):
        try:
            msg = lehmer.client_lehmer_message(shard, bits, client_rngs[k])
        except ValueError as exc:
            raise ExperimentError(f"client {clients.labels[k]}: {exc}") from exc
        flat.append(lehmer.flatten_message(msg))
    total = secure_sum(np.stack(flat), moduli, mask_rng, params.mask)
    high, hist = lehmer.unflatten_sum(total, n, bits)
    est = lehmer.server_lehmer_aggregate(high, hist, num, bits)
    p = mallows.displacement_p(n, params.phi)[0] if n >= 2 else None
    ledger = tally_cost("lehmer", n, num, bits, moduli, total_samples=m_public, epsilon=params.epsilon, p=p)
    meta = {
        "truncation_bits": bits,
        "public_total_samples": m_public,
        "high_ring": "Z_{L*2^w} (widened by L for exact unmasking)",
        "histogram_ring": f"Z_{num + 1}",
    }
    return est, ledger, meta


def run_federated_round(clients: ClientDataset, method: str, params: ProtocolParams, seed: int = 0,
                        key: Sequence[int] = (), centroid=None, eval_rankings=None) -> FRAReport:
    """One round of ``method`` on ``clients``.

    ``key`` identifies the round inside a larger experiment so that its random
    streams are distinct; metrics are evaluated against ``eval_rankings``
    (default: the pooled client data) and, when given, the true ``centroid``.
    """
    if method not in METHODS:
        raise ExperimentError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    key = tuple(key)
    client_rngs = [stream(seed, _CLIENT, *key, k) for k in range(clients.num_clients)]
    mask_rng = stream(seed, _MASK, *key)
    pooled = clients.pooled()
    cost = None
    meta: dict[str, Any] = {}
    if method == "borda_central":
        est = borda.central_borda(pooled).estimate
    elif method == "lehmer_central":
        codes = lehmer_encode_batch(pooled)
        est = lehmer_decode(lehmer.coordinate_majority(codes, client_rngs[0]))
    elif method == "footrule":
        est, _ = baselines.footrule_aggregate(pooled)
    elif method == "kemeny_bruteforce":
        est = baselines.kemeny_bruteforce(pooled)
    elif method == "borda_fra":
        est, cost, meta = _borda_fra(clients, params, mask_rng)
    else:
        est, cost, meta = _lehmer_fra(clients, params, client_rngs, mask_rng)
    if method in FEDERATED:
        meta["masked"] = bool(params.mask and clients.num_clients >= 2)
    target = pooled if eval_rankings is None else eval_rankings
    metrics = {"kemeny_objective": baselines.kemeny_objective(est, target)}
    if centroid is not None:
        d = kendall_tau(centroid, est)
        metrics["kendall_to_centroid"] = float(d)
        metrics["exact_recovery"] = float(d == 0)
    return FRAReport(method, np.asarray(est, dtype=np.int64), metrics, cost, metadata=meta)


# --- experiment configuration -------------------------------------------------

@dataclass
class ExperimentConfig:
    """Sweep definition; see README for the YAML schema."""

    methods: list[str]
    source: dict[str, Any]
    axis: dict[str, Any]
    trials: int = 10
    seed: int = 0
    phi_quant: float | None = None
    epsilon: float = 0.05
    mask: bool = True
    truncation_bits: int | None = None
    cache_dir: str | None = None
    output: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ExperimentError(f"unknown or missing methods: {bad}")
        if self.trials < 1:
            raise ExperimentError("trials must be >= 1")
        kind = self.source.get("kind")
        if kind not in ("synthetic", "dataset"):
            raise ExperimentError(f"source.kind must be 'synthetic' or 'dataset', got {kind!r}")
        allowed = {"synthetic": ("samples_per_client", "num_clients"), "dataset": ("samples_per_client",)}[kind]
        if self.axis.get("name") not in allowed:
            raise ExperimentError(f"axis.name for a {kind} source must be one of {allowed}")
        if not axis_values(self.axis):
            raise ExperimentError("axis needs at least one value")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise ExperimentError(f"unknown config keys: {sorted(extra)}")
        return cls(**raw)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        raw = yaml.safe_load(Path(path).read_text()) or {}
        cfg = cls.from_dict(raw)
        src = cfg.source
        if src.get("kind") == "dataset" and not Path(src["path"]).is_absolute():
            src["path"] = str(Path(path).parent / src["path"])
        return cfg


def axis_values(axis: dict[str, Any]) -> list[int]:
    vals = axis.get("values")
    if isinstance(vals, dict):
        return list(range(int(vals["start"]), int(vals["stop"]) + 1, int(vals.get("step", 1))))
    return [int(v) for v in (vals or [])]


def _centroid(src: dict[str, Any], seed: int) -> np.ndarray:
    n = int(src["n"])
    choice = src.get("centroid", "identity")
    if choice == "identity":
        return np.arange(1, n + 1)
    if choice == "random":
        return stream(seed, _CENTROID).permutation(n) + 1
    return as_permutation(choice)


def _load_dataset(src: dict[str, Any], seed: int) -> ClientDataset:
    fmt = src.get("format", "rankings")
    labels = None
    if fmt == "rankings":
        rankings, labels = load_rankings_csv(src["path"], orders=bool(src.get("orders", False)))
    elif fmt == "scores":
        rankings = load_scores_csv(src["path"]).rankings
    elif fmt == "ballots":
        rankings = load_ballots(src["path"], src.get("num_items"), stream(seed, _DATA))
    else:
        raise ExperimentError(f"unknown dataset format {fmt!r}")
    part = dict(src.get("partition", {"strategy": "random_shards", "num_clients": 10}))
    strategy = part.pop("strategy")
    return partition_clients(rankings, strategy, labels=labels, seed=seed, **part)


RESULT_COLUMNS = ("axis", "value", "method", "trials", "mean_kendall", "exact_recovery",
                  "mean_kemeny", "bits_per_round")


def run_experiment_sweep(config: ExperimentConfig) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """Run every method at every grid point; returns (summary rows, per-trial records)."""
    src = config.source
    axis_name = config.axis["name"]
    grid = axis_values(config.axis)
    rows: list[dict[str, Any]] = []
    records: list[dict[str, Any]] = []

    if src["kind"] == "synthetic":
        centroid = _centroid(src, config.seed)
        model = mallows.MallowsParams(float(src["phi"]), centroid)
        phi_q = config.phi_quant if config.phi_quant is not None else model.phi
        dataset = None
    else:
        dataset = _load_dataset(src, config.seed)
        centroid = None
        phi_q = config.phi_quant if config.phi_quant is not None else 0.6
        full = dataset.pooled()

    n = model.n if dataset is None else dataset.n
    table = None
    if "borda_fra" in config.methods:
        table = mallows.cached_table(n, phi_q, config.cache_dir, stream(config.seed, _CENTROID, 1))
    params = ProtocolParams(phi=phi_q, epsilon=config.epsilon, mask=config.mask,
                            trunc_bits=config.truncation_bits, table=table, cache_dir=config.cache_dir)

    for g, value in enumerate(grid):
        acc = {m: [] for m in config.methods}
        for t in range(config.trials):
            if dataset is None:
                num_clients = value if axis_name == "num_clients" else int(src["num_clients"])
                per_client = value if axis_name == "samples_per_client" else int(src["samples_per_client"])
                shards = [mallows.sample(model, stream(config.seed, _DATA, g, t, k), size=per_client)
                          for k in range(num_clients)]
                clients = ClientDataset.from_shards(shards)
                eval_rankings = None
            else:
                clients = dataset.truncated(value)
                eval_rankings = full
            for mi, method in enumerate(config.methods):
                rep = run_federated_round(clients, method, params, config.seed, key=(g, t, mi),
                                          centroid=centroid, eval_rankings=eval_rankings)
                rec = {"axis": axis_name, "value": value, "trial": t, "method": method,
                       "estimate": [int(x) for x in rep.estimate], **rep.metrics,
                       "bits_per_round": rep.cost.total_bits if rep.cost else 0}
                records.append(rec)
                acc[method].append(rec)
        for method in config.methods:
            recs = acc[method]
            row = {
                "axis": axis_name,
                "value": value,
                "method": method,
                "trials": len(recs),
                "mean_kendall": float(np.mean([r["kendall_to_centroid"] for r in recs])) if centroid is not None else None,
                "exact_recovery": float(np.mean([r["exact_recovery"] for r in recs])) if centroid is not None else None,
                "mean_kemeny": float(np.mean([r["kemeny_objective"] for r in recs])),
                "bits_per_round": int(np.mean([r["bits_per_round"] for r in recs])),
            }
            rows.append(row)
        log.info("grid point %s=%s done", axis_name, value)
    return rows, records


def format_table(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row[k] is None else (repr(row[k]) if isinstance(row[k], float) else row[k]))
                         for k in RESULT_COLUMNS})
    return buf.getvalue()


def write_results(config: ExperimentConfig, rows, records, table_path: str | Path,
                  report_path: str | Path | None = None) -> None:
    Path(table_path).write_text(format_table(rows))
    if report_path is not None:
        report = {"config": asdict(config), "rows": rows, "trials": records}
        Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
