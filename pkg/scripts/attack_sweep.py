"""Lock benchmarks with static or per-row keys and run the SAT attack on each.

Writes one CSV row per (benchmark, seed):

    python scripts/attack_sweep.py --mode static --out static.csv
    python scripts/attack_sweep.py --mode dynamic --seeds 5 --jobs 4
"""
import argparse
import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from kgatelock.attack import AttackStatus, sat_attack, verify_key
from kgatelock.locking import LockConfig, lock_circuit
from kgatelock.netlist import load_bench
from kgatelock.simeval import SimOracle

BENCH = Path(__file__).resolve().parents[1] / "benchmarks"
DEFAULT = ["c17", "c432", "c499", "c880", "c1355", "c1908", "c2670", "c3540", "c5315",
           "c7552"]


@dataclass
class Row:
    benchmark: str
    mode: str
    seed: int
    gates: int
    m: int
    status: str
    key: str
    verified: str
    iterations: int
    seconds: float


def run_one(name: str, mode: str, seed: int, k: int, timeout: float) -> Row:
    c = load_bench(BENCH / f"{name}.bench")
    g = 2 if name == "c17" else 3
    if mode == "static":
        cfg = LockConfig(k=k, g=g, keys=("101",), static=True)
    else:
        cfg = LockConfig(k=k, g=g, keys=("011", "100", "101"))
    locked, sched, rep = lock_circuit(c, cfg)
    oracle = SimOracle(c)
    t0 = time.perf_counter()
    res = sat_attack(locked, oracle, seed=seed, timeout=timeout)
    verified = "-"
    if res.status is AttackStatus.KEY_CANDIDATE:
        verified = str(verify_key(locked, res.key, oracle)[0]).lower()
    return Row(name, mode, seed, rep.locked_gate_count, sched.m, res.status.value,
               res.key_bits or "-", verified, res.iterations,
               round(time.perf_counter() - t0, 3))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mode", choices=["static", "dynamic"], default="dynamic")
    p.add_argument("--benchmarks", nargs="+", default=DEFAULT)
    p.add_argument("--seeds", type=int, default=1, help="attack seeds 0..N-1")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--timeout", type=float, default=120.0, help="seconds per attack")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path (default: stdout)")
    args = p.parse_args(argv)

    tasks = [(b, args.mode, s, args.k, args.timeout) for b in args.benchmarks
             for s in range(args.seeds)]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        rows = list(pool.map(run_one, *zip(*tasks)))

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.DictWriter(fh, fieldnames=list(asdict(rows[0])))
    writer.writeheader()
    for r in rows:
        writer.writerow(asdict(r))
    if args.out:
        fh.close()
    broken = sum(r.verified == "true" for r in rows)
    print(f"# {broken}/{len(rows)} attacks produced a verified key", file=sys.stderr)


if __name__ == "__main__":
    main()
