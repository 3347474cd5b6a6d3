"""Lock each benchmark with a total key size m, then report overhead and attack outcome.

Key sizes default to the per-benchmark sizes below; each gate gets a
5-bit key word (the c17 entry uses two 1-bit gates).

    python scripts/scaled_key_sweep.py --timeout 60 --out scaled.csv
"""
import argparse
import csv
import sys
import time
from pathlib import Path

from kgatelock.attack import AttackStatus, sat_attack, verify_key
from kgatelock.locking import LockConfig, lock_circuit
from kgatelock.netlist import cell_counts, load_bench
from kgatelock.simeval import Budget, SimOracle, equiv_check

BENCH = Path(__file__).resolve().parents[1] / "benchmarks"
KEY_SIZES = {"c17": 2, "c432": 30, "c499": 40, "c880": 60, "c1355": 40, "c1908": 30,
             "c3540": 50, "c5315": 170, "c6288": 30, "c7552": 200}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--benchmarks", nargs="+", default=list(KEY_SIZES))
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--no-attack", action="store_true")
    p.add_argument("--out")
    args = p.parse_args(argv)

    fields = ["benchmark", "m", "gates", "inputs", "inputs_locked", "cells", "cells_locked",
              "cell_delta_pct", "equivalent", "status", "verified", "seconds"]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.DictWriter(fh, fieldnames=fields)
    writer.writeheader()
    for name in args.benchmarks:
        c = load_bench(BENCH / f"{name}.bench")
        m = KEY_SIZES[name]
        width = 1 if name == "c17" else 5
        cfg = LockConfig(k=args.k, g=m // width, key_bits=width,
                         num_keys=min(3, 1 << args.k), seed=args.seed)
        locked, sched, rep = lock_circuit(c, cfg)
        eq = equiv_check(c, locked, sched, Budget.auto(len(c.comb_inputs), seed=args.seed))
        row = dict(benchmark=name, m=sched.m, gates=rep.locked_gate_count,
                   inputs=len(c.inputs), inputs_locked=len(locked.inputs),
                   cells=sum(cell_counts(c).values()),
                   cells_locked=sum(cell_counts(locked).values()),
                   equivalent=eq.equivalent, status="-", verified="-", seconds="-")
        row["cell_delta_pct"] = round(100 * (row["cells_locked"] - row["cells"]) / row["cells"], 2)
        if not args.no_attack:
            oracle = SimOracle(c)
            t0 = time.perf_counter()
            res = sat_attack(locked, oracle, seed=args.seed, timeout=args.timeout)
            row["status"] = res.status.value
            if res.status is AttackStatus.KEY_CANDIDATE:
                row["verified"] = verify_key(locked, res.key, oracle)[0]
            row["seconds"] = round(time.perf_counter() - t0, 3)
        writer.writerow(row)
        fh.flush()
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
