"""Command line entry point: ``fedrank {synth,centroids,aggregate,experiment,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import baselines, mallows
from .data import (
    ClientDataset,
    load_ballots,
    load_rankings_csv,
    load_scores_csv,
    partition_clients,
    save_client_dataset,
)
from .harness import (
    METHODS,
    ExperimentConfig,
    ProtocolParams,
    run_experiment_sweep,
    run_federated_round,
    stream,
    write_results,
)
from .perm import as_permutation, kendall_tau_many, spearman_footrule


def _perm_arg(text: str) -> np.ndarray:
    return as_permutation([int(x) for x in text.split(",")])


def _centroid_arg(text: str, n: int, seed: int) -> np.ndarray:
    if text == "identity":
        return np.arange(1, n + 1)
    if text == "random":
        return np.random.default_rng(seed).permutation(n) + 1
    perm = _perm_arg(text)
    if perm.size != n:
        raise ValueError(f"centroid has {perm.size} items, expected {n}")
    return perm


def _load_rankings(args) -> tuple[np.ndarray, list[str] | None]:
    if args.format == "rankings":
        return load_rankings_csv(args.input, orders=args.orders)
    if args.format == "scores":
        table = load_scores_csv(args.input)
        if table.dropped:
            print(f"dropped {table.dropped} incomplete score rows", file=sys.stderr)
        return table.rankings, None
    return load_ballots(args.input, args.num_items, np.random.default_rng(args.seed)), None


def cmd_synth(args) -> int:
    centroid = _centroid_arg(args.centroid, args.n, args.seed)
    model = mallows.MallowsParams(args.phi, centroid)
    shards = [mallows.sample(model, stream(args.seed, 1, k), size=args.samples) for k in range(args.clients)]
    save_client_dataset(args.out, ClientDataset.from_shards(shards))
    print(f"wrote {args.clients * args.samples} rankings to {args.out}")
    return 0


def cmd_centroids(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.method == "exact":
        table = mallows.expected_positions_exact(args.n, args.phi)
    elif args.method == "recursive":
        table = mallows.expected_positions_recursive(args.n, args.phi)
    elif args.method == "mc":
        table = mallows.expected_positions_mc(args.n, args.phi, args.samples, rng)
    else:
        table = mallows.quant_table(args.n, args.phi, rng, args.samples)
    if args.out:
        mallows.save_table(table, args.out)
    else:
        print(f"{table.n} {table.phi!r} {table.method} {table.num_samples}")
        for x in table.centroids:
            print(repr(float(x)))
    return 0


def cmd_aggregate(args) -> int:
    rankings, labels = _load_rankings(args)
    if args.partition == "group":
        clients = partition_clients(rankings, "by_group", labels=labels, min_size=args.min_size)
    else:
        clients = partition_clients(rankings, "random_shards", num_clients=args.clients, seed=args.seed)
    params = ProtocolParams(phi=args.phi, epsilon=args.epsilon, mask=not args.no_mask,
                            trunc_bits=args.truncation_bits, total_samples=args.total_samples)
    centroid = _perm_arg(args.centroid) if args.centroid else None
    reports = []
    for method in args.method:
        rep = run_federated_round(clients, method, params, args.seed, centroid=centroid)
        rep.config = {"input": str(args.input), "format": args.format, "phi": args.phi,
                      "epsilon": args.epsilon, "seed": args.seed, "mask": not args.no_mask,
                      "clients": clients.sizes, "dropped": clients.dropped}
        reports.append(rep.to_dict())
        bits = rep.cost.total_bits if rep.cost else 0
        print(f"{method}: estimate={','.join(map(str, rep.estimate))} "
              f"kemeny={rep.metrics['kemeny_objective']:.6f} bits={bits}")
    if args.out:
        Path(args.out).write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    table = args.table or cfg.output.get("table", "results.csv")
    report = args.report or cfg.output.get("report")
    rows, records = run_experiment_sweep(cfg)
    write_results(cfg, rows, records, table, report)
    print(f"wrote {len(rows)} rows to {table}")
    return 0


def cmd_eval(args) -> int:
    rankings, _ = _load_rankings(args)
    cand = _perm_arg(args.candidate)
    dists = kendall_tau_many(cand, rankings)
    out = {
        "num_rankings": int(rankings.shape[0]),
        "kemeny_objective": baselines.kemeny_objective(cand, rankings),
        "mean_kendall": float(dists.mean()),
        "mean_footrule": float(np.mean([spearman_footrule(cand, r) for r in rankings])),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", type=Path)
    p.add_argument("--format", choices=("rankings", "scores", "ballots"), default="rankings")
    p.add_argument("--orders", action="store_true", help="rankings rows list item ids best-first")
    p.add_argument("--num-items", type=int, help="number of candidates for ballot files")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedrank", description="Federated rank aggregation toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="sample Mallows rankings into a labeled CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--centroid", default="identity", help="identity, random, or comma-separated ranking")
    p.add_argument("--clients", type=int, default=10)
    p.add_argument("--samples", type=int, default=10, help="rankings per client")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("centroids", help="compute a Borda quantization table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--method", choices=("auto", "exact", "recursive", "mc"), default="auto")
    p.add_argument("--samples", type=int, default=mallows.MC_DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_centroids)

    p = sub.add_parser("aggregate", help="run one aggregation round on a dataset")
    _add_input(p)
    p.add_argument("--method", choices=METHODS, action="append", required=True)
    p.add_argument("--phi", type=float, default=0.6)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--partition", choices=("group", "random"), default="random")
    p.add_argument("--clients", type=int, default=10)
    p.add_argument("--min-size", type=int, default=1)
    p.add_argument("--truncation-bits", type=int)
    p.add_argument("--total-samples", type=int, help="public sample count used for truncation bits")
    p.add_argument("--centroid", help="known centroid, for Kendall metrics")
    p.add_argument("--no-mask", action="store_true", help="skip masking (debug path)")
    p.add_argument("--out", type=Path, help="write the full JSON report here")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("experiment", help="run a sweep from a YAML config")
    p.add_argument("config", type=Path)
    p.add_argument("--table", type=Path)
    p.add_argument("--report", type=Path)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("eval", help="score a candidate ranking against a dataset")
    _add_input(p)
    p.add_argument("--candidate", required=True, help="comma-separated ranking")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"fedrank {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
