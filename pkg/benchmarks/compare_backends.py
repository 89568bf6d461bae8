"""Time the compiled and pure-Python probing kernels on the same workload.

    python benchmarks/compare_backends.py --num-ids 50000 --table-size 75000
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mpzch import _backend
from mpzch.bench import DEFAULT_PROBES, generate_ids


def time_kernel(kernels, ids, table_size, probe, mode, now=1000):
    idents = np.full(table_size, -1, dtype=np.int64)
    meta = np.zeros(table_size, dtype=np.uint64)
    metas = np.full(ids.size, now + 3600 if mode == 1 else now, dtype=np.uint64)
    slots = np.empty(ids.size, dtype=np.int64)
    codes = np.empty(ids.size, dtype=np.int8)
    t0 = time.perf_counter()
    kernels.probe_run(ids, metas, now, idents, meta, 0, probe, mode, slots, codes)
    elapsed = time.perf_counter() - t0
    return elapsed, slots, codes


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--num-ids", type=int, default=50_000)
    parser.add_argument("--table-size", type=int, default=75_000)
    parser.add_argument("--max-probe", type=int, action="append")
    parser.add_argument("--mode", type=int, choices=(0, 1, 2), default=0, help="0 disabled, 1 ttl, 2 lru")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    kernels = _backend.available()
    ids = generate_ids(args.num_ids, args.seed)
    print(f"{'P':>5} " + " ".join(f"{name + ' ids/s':>16}" for name in kernels) + "   speedup  agree")
    for p in args.max_probe or DEFAULT_PROBES:
        runs = {name: time_kernel(k, ids, args.table_size, p, args.mode) for name, k in kernels.items()}
        rates = {name: ids.size / r[0] for name, r in runs.items()}
        line = f"{p:>5} " + " ".join(f"{rates[name]:>16,.0f}" for name in kernels)
        if len(runs) == 2:
            (s1, c1), (s2, c2) = (r[1:] for r in runs.values())
            agree = np.array_equal(s1, s2) and np.array_equal(c1, c2)
            line += f"   {rates['cython'] / rates['python']:>7.1f}x  {agree}"
        print(line)


if __name__ == "__main__":
    main()
