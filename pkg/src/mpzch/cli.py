"""Command-line harness: ``mpzch collide|churn|bench|publish-roundtrip``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import _backend
from .batch import IdBatch, ShardedTable
from .bench import (
    DEFAULT_PROBES,
    WorkloadSpec,
    emit_report,
    generate_ids,
    run_churn_simulation,
    run_collision_experiment,
    run_latency_bench,
)
from .eviction import EvictionPolicy, parse_feature_ttls
from .publish import DeltaPublisher, apply_delta, read_delta, read_snapshot, write_delta, write_snapshot
from .shard_router import TableLayout

log = logging.getLogger("mpzch")


def _policy(args) -> EvictionPolicy:
    if args.policy == "ttl":
        return EvictionPolicy.with_ttl(args.ttl_seconds, parse_feature_ttls(args.feature_ttl))
    if args.policy == "lru":
        return EvictionPolicy.lru()
    return EvictionPolicy.disabled()


def _common(p: argparse.ArgumentParser, *, table_default: int) -> None:
    p.add_argument("--num-ids", type=int, default=150_000)
    p.add_argument("--table-size", type=int, action="append",
                   help=f"total rows; repeatable (default {table_default})")
    p.add_argument("--max-probe", type=int, action="append", help="probe depth; repeatable")
    p.add_argument("--method", choices=("mpzch", "baseline"), default="mpzch")
    p.add_argument("--policy", choices=("disabled", "ttl", "lru"), default="disabled")
    p.add_argument("--ttl-seconds", type=int, default=259_200)
    p.add_argument("--feature-ttl", action="append", default=[], metavar="FEATURE=SECONDS")
    p.add_argument("--num-shards", type=int, default=1)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", type=Path, help="output path (stdout when omitted)")
    p.set_defaults(table_default=table_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpzch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collide", help="collision rate per (table size, probe depth)")
    _common(p, table_default=150_000)

    p = sub.add_parser("churn", help="stale-inheritance audit under ID churn")
    _common(p, table_default=20_000)
    p.add_argument("--steps", type=int, default=48)
    p.add_argument("--new-per-step", type=int, default=500)
    p.add_argument("--revisits-per-step", type=int, default=1000)
    p.add_argument("--active-window", type=int, default=6)
    p.add_argument("--step-seconds", type=int, default=3600)

    p = sub.add_parser("bench", help="batched vs per-ID throughput per probe depth")
    _common(p, table_default=40_000)
    p.add_argument("--batch-size", type=int, default=1024)
    p.add_argument("--repetitions", type=int, default=3)

    p = sub.add_parser("publish-roundtrip", help="snapshot + delta chain vs live source")
    _common(p, table_default=4096)
    p.add_argument("--batches", type=int, default=100)
    p.add_argument("--cuts", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=256)
    return parser


def _emit(report, args) -> None:
    if args.out is not None:
        emit_report(report, args.format, args.out)
        return
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / f"report.{args.format}"
        emit_report(report, args.format, path)
        sys.stdout.write(path.read_text())


def _spec(args, table_size: int, **extra) -> WorkloadSpec:
    probes = tuple(args.max_probe) if args.max_probe else (64,)
    return WorkloadSpec(num_ids=args.num_ids, table_size=table_size, max_probes=probes,
                        method=args.method, policy=_policy(args), num_shards=args.num_shards,
                        seed=args.seed, dim=args.dim, **extra)


def cmd_collide(args) -> int:
    if not args.max_probe:
        args.max_probe = list(DEFAULT_PROBES)
    report = None
    for size in args.table_size or [args.table_default]:
        r = run_collision_experiment(_spec(args, size))
        if report is None:
            report = r
        else:
            report.records.extend(r.records)
    _emit(report, args)
    return 0


def cmd_churn(args) -> int:
    spec = _spec(args, (args.table_size or [args.table_default])[0],
                 steps=args.steps, new_per_step=args.new_per_step,
                 revisits_per_step=args.revisits_per_step, active_window=args.active_window,
                 step_seconds=args.step_seconds)
    _emit(run_churn_simulation(spec), args)
    return 0


def cmd_bench(args) -> int:
    if not args.max_probe:
        args.max_probe = list(DEFAULT_PROBES)
    if args.num_ids == 150_000:
        args.num_ids = 20_000
    spec = _spec(args, (args.table_size or [args.table_default])[0])
    log.info("bench backend: %s", _backend.BACKEND)
    _emit(run_latency_bench(spec, args.batch_size, args.repetitions), args)
    return 0


def cmd_publish_roundtrip(args) -> int:
    """Train a source, publish snapshot plus delta cuts to disk, rebuild a replica, compare."""
    size = (args.table_size or [args.table_default])[0]
    probe = (args.max_probe or [64])[0]
    policy = _policy(args)
    layout = TableLayout.uniform(size, args.num_shards, args.seed)
    source = ShardedTable(layout, probe, policy, args.dim, args.seed)
    rng = np.random.default_rng(args.seed)
    universe = generate_ids(max(args.num_ids, 1), args.seed)
    workdir = Path(args.out).parent if args.out else Path(tempfile.mkdtemp(prefix="mpzch-"))
    workdir.mkdir(parents=True, exist_ok=True)

    snap_path = workdir / "table.mpzc"
    crc = write_snapshot(source, snap_path)
    publisher = DeltaPublisher(source, crc)
    every = max(1, args.batches // max(1, args.cuts))
    delta_paths = []
    for b in range(args.batches):
        ids = rng.choice(universe, size=args.batch_size)
        out = source.process_batch(IdBatch(ids, now=b * 600))
        rows = np.unique(out.rows)
        grads = rng.standard_normal((rows.size, args.dim)).astype(np.float32)
        source.embeddings.sgd_step(rows, grads, 0.05, 0.9)
        if (b + 1) % every == 0 or b == args.batches - 1:
            path = workdir / f"delta-{publisher.sequence + 1:06d}.mpzd"
            write_delta(publisher.cut(), path)
            delta_paths.append(path)

    replica = read_snapshot(snap_path)
    for path in delta_paths:
        apply_delta(replica, read_delta(path))
    idents_ok = np.array_equal(replica.identities, source.identities())
    weights_ok = np.array_equal(replica.weights.view(np.uint32), source.embeddings.weights.view(np.uint32))
    occupied = np.flatnonzero(replica.identities != -1)
    lookup_ok = all(replica.lookup_readonly(int(replica.identities[r])).slot == r for r in occupied.tolist())
    summary = {
        "snapshot": str(snap_path),
        "deltas": len(delta_paths),
        "occupied_rows": int(occupied.size),
        "identities_equal": bool(idents_ok),
        "weights_equal": bool(weights_ok),
        "lookup_consistent": bool(lookup_ok),
    }
    text = json.dumps(summary, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if idents_ok and weights_ok and lookup_ok else 1


COMMANDS = {
    "collide": cmd_collide,
    "churn": cmd_churn,
    "bench": cmd_bench,
    "publish-roundtrip": cmd_publish_roundtrip,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OverflowError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
