"""Command-line interface.

Every command prints ``key=value`` lines on stdout; ``--pretty`` appends a
human-readable table. Output depends only on flags, seeds and file
contents, so reruns are byte-identical. Errors go to stderr as one line.

Exit codes: 0 success, 1 verification mismatch, 2 bad input, 3 no eligible
gates, 4 attack key failed verification, 5 attack gave up (no consistent
key, iteration limit or timeout).
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .attack import (AttackError, AttackStatus, brute_force_multikey, build_miter,
                     sat_attack, split_inputs, verify_key)
from .locking import (LockConfig, LockError, NoEligibleGates, ScheduleFormatError,
                      lock_circuit, parse_schedule, write_schedule)
from .netlist import NetlistError, cell_counts, load_bench, save_bench
from .simeval import (Budget, InterfaceError, SimOracle, equiv_check, fmt_bits, key_for,
                      parse_bits)

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_NO_GATES, EXIT_WRONG_KEY, EXIT_GAVE_UP = range(6)


class UsageError(ValueError):
    pass


@dataclass
class RunReport:
    command: str
    params: dict = field(default_factory=dict)
    digests: dict = field(default_factory=dict)
    results: list = field(default_factory=list)  # (key, value) in print order
    extra: list = field(default_factory=list)  # pretty-only rows

    def add(self, key, value):
        self.results.append((key, value))

    def digest(self, role: str, path) -> None:
        self.digests[role] = hashlib.sha256(Path(path).read_bytes()).hexdigest()

    def lines(self) -> list[str]:
        out = [f"command={self.command}"]
        out += [f"param.{k}={_fmt(v)}" for k, v in self.params.items()]
        out += [f"sha256.{k}={v}" for k, v in self.digests.items()]
        out += [f"{k}={_fmt(v)}" for k, v in self.results]
        return out

    def table(self) -> list[str]:
        rows = [(k, _fmt(v)) for k, v in self.results + self.extra]
        width = max((len(k) for k, _ in rows), default=0)
        bar = "-" * (width + 2 + max((len(v) for _, v in rows), default=0))
        return [bar, f"{self.command}", bar] + [f"{k.ljust(width)}  {v}" for k, v in rows] + [bar]

    def emit(self, pretty: bool = False) -> None:
        text = self.lines() + (self.table() if pretty else [])
        sys.stdout.write("\n".join(text) + "\n")


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


# --- commands ---

def cmd_lock(args) -> int:
    if args.keys and (args.key_bits is not None or args.num_keys is not None):
        raise UsageError("give either --keys or --key-bits/--num-keys, not both")
    if not args.keys and (args.key_bits is None or args.num_keys is None):
        raise UsageError("need --keys, or --key-bits with --num-keys")
    keys = tuple(k.strip() for k in args.keys.split(",")) if args.keys else ()
    cfg = LockConfig(k=args.k, g=args.gates, keys=keys, mode=args.mode, select=args.select,
                     static=args.static, seed=args.seed, key_prefix=args.key_prefix,
                     key_bits=args.key_bits, num_keys=args.num_keys)
    circuit = load_bench(args.bench)
    resolved = cfg.resolved_keys()
    cfg.keys = tuple(resolved)
    locked, schedule, report = lock_circuit(circuit, cfg)
    save_bench(locked, args.out)
    Path(args.schedule).write_text(write_schedule(schedule), encoding="utf-8", newline="\n")

    rep = RunReport("lock", dict(k=args.k, gates=args.gates, keys=list(resolved),
                                 static=args.static, mode=args.mode, select=args.select,
                                 seed=args.seed, key_prefix=args.key_prefix))
    rep.digest("bench", args.bench)
    rep.digest("out", args.out)
    rep.digest("schedule", args.schedule)
    rep.add("circuit", circuit.name)
    rep.add("locked_gates", report.locked_gates)
    rep.add("locked_gate_count", report.locked_gate_count)
    rep.add("m", report.key_input_count)
    rep.add("key_inputs", list(schedule.key_inputs))
    rep.add("cells.original", report.original_cell_count)
    rep.add("cells.locked", report.locked_cell_count)
    rep.add("cells.added", report.added_cell_count)
    for gate, size in report.onset_sizes.items():
        rep.add(f"onset.{gate}", size)
    if report.skipped_gates:
        rep.add("skipped_gates", [g for g, _ in report.skipped_gates])
    for i, w in enumerate(report.warnings):
        rep.add(f"warning.{i}", w)
    rep.emit(args.pretty)
    return EXIT_OK


def cmd_verify(args) -> int:
    orig = load_bench(args.orig)
    locked = load_bench(args.locked)
    schedule = parse_schedule(Path(args.schedule).read_text(encoding="utf-8"))
    n = len(orig.comb_inputs)
    if args.exhaustive:
        budget = Budget(exhaustive=True)
    elif args.samples is not None:
        budget = Budget(exhaustive=False, samples=args.samples, seed=args.seed)
    else:
        budget = Budget.auto(n, seed=args.seed)
    res = equiv_check(orig, locked, schedule, budget)
    rep = RunReport("verify", dict(exhaustive=budget.exhaustive,
                                   samples=None if budget.exhaustive else budget.samples,
                                   seed=None if budget.exhaustive else budget.seed))
    rep.digest("orig", args.orig)
    rep.digest("locked", args.locked)
    rep.digest("schedule", args.schedule)
    rep.add("equivalent", res.equivalent)
    rep.add("tested", res.tested)
    if res.counterexample:
        x, want, got = res.counterexample
        rep.add("counterexample.input", x)
        rep.add("counterexample.expected", want)
        rep.add("counterexample.got", got)
    rep.emit(args.pretty)
    return EXIT_OK if res.equivalent else EXIT_MISMATCH


def cmd_attack_sat(args) -> int:
    locked = load_bench(args.locked)
    oracle = SimOracle(load_bench(args.oracle))
    data, keys = split_inputs(locked, None, args.key_prefix)
    if args.dimacs:
        f, *_ = build_miter(locked, data, keys)
        Path(args.dimacs).write_text(f.to_dimacs(), encoding="utf-8", newline="\n")
    res = sat_attack(locked, oracle, keys, max_iter=args.max_iter, timeout=args.timeout,
                     seed=args.seed)
    rep = RunReport("attack.sat", dict(max_iter=args.max_iter, timeout=args.timeout,
                                       seed=args.seed, key_prefix=args.key_prefix))
    rep.digest("locked", args.locked)
    rep.digest("oracle", args.oracle)
    if args.dimacs:
        rep.digest("dimacs", args.dimacs)
    rep.add("status", res.status.value)
    rep.add("m", len(keys))
    rep.add("key", res.key_bits)
    rep.add("iterations", res.iterations)
    code = EXIT_GAVE_UP
    verified = None
    if res.status is AttackStatus.KEY_CANDIDATE:
        verified, rate = verify_key(locked, res.key, oracle, Budget(samples=args.samples,
                                                                    seed=args.seed or 0),
                                    keys)
        rep.add("corruption", rate)
        code = EXIT_OK if verified else EXIT_WRONG_KEY
    rep.add("verified", verified)
    rep.extra.append(("elapsed_s", round(res.elapsed, 3)))
    rep.emit(args.pretty)
    return code


def cmd_attack_brute(args) -> int:
    locked = load_bench(args.locked)
    oracle = SimOracle(load_bench(args.oracle))
    rec = brute_force_multikey(locked, oracle, key_prefix=args.key_prefix)
    Path(args.schedule_out).write_text(rec.to_text(), encoding="utf-8", newline="\n")
    n, m = len(rec.inputs), len(rec.key_inputs)
    sizes = [len(s) for s in rec.sets.values()]
    rep = RunReport("attack.brute", dict(key_prefix=args.key_prefix))
    rep.digest("locked", args.locked)
    rep.digest("oracle", args.oracle)
    rep.digest("schedule_out", args.schedule_out)
    rep.add("n", n)
    rep.add("m", m)
    rep.add("combinations", 1 << (n + m))
    rep.add("patterns", len(rec.sets))
    rep.add("keys_per_pattern.min", min(sizes, default=0))
    rep.add("keys_per_pattern.max", max(sizes, default=0))
    rep.add("common_keys", len(rec.common_keys()))
    rep.emit(args.pretty)
    return EXIT_OK


def _pct(before: int, after: int) -> float:
    return 0.0 if before == after else (100.0 * (after - before) / before if before else
                                         float("inf"))


def cmd_stats(args) -> int:
    orig = load_bench(args.orig)
    locked = load_bench(args.locked)
    if not set(orig.inputs) <= set(locked.inputs):
        raise InterfaceError("locked circuit does not keep the original inputs")
    m = len(locked.inputs) - len(orig.inputs)
    co, cl = cell_counts(orig), cell_counts(locked)
    rep = RunReport("stats")
    rep.digest("orig", args.orig)
    rep.digest("locked", args.locked)
    rep.add("inputs.original", len(orig.inputs))
    rep.add("inputs.locked", len(locked.inputs))
    rep.add("outputs.original", len(orig.outputs))
    rep.add("outputs.locked", len(locked.outputs))
    rep.add("m", m)
    io_o = len(orig.inputs) + len(orig.outputs)
    io_l = len(locked.inputs) + len(locked.outputs)
    rep.add("io.delta", io_l - io_o)
    rep.add("io.delta_pct", _pct(io_o, io_l))
    for kind in sorted(set(co) | set(cl)):
        rep.add(f"cells.{kind}.original", co.get(kind, 0))
        rep.add(f"cells.{kind}.locked", cl.get(kind, 0))
    total_o, total_l = sum(co.values()), sum(cl.values())
    rep.add("cells.original", total_o)
    rep.add("cells.locked", total_l)
    rep.add("cells.delta", total_l - total_o)
    rep.add("cells.delta_pct", _pct(total_o, total_l))
    rep.emit(args.pretty)
    return EXIT_OK


def cmd_schedule(args) -> int:
    schedule = parse_schedule(Path(args.schedule).read_text(encoding="utf-8"))
    try:
        x = parse_bits(args.input)
    except ValueError as e:
        raise InterfaceError(str(e)) from None
    circuit = load_bench(args.bench) if args.bench else None
    key = key_for(schedule, x, circuit)
    rep = RunReport("schedule.keyfor", dict(input=args.input))
    rep.digest("schedule", args.schedule)
    pos = 0
    for spec in schedule.specs:
        rep.add(f"key.{spec.gate}", fmt_bits(key[pos:pos + spec.width]))
        pos += spec.width
    rep.add("key", fmt_bits(key))
    rep.emit(args.pretty)
    return EXIT_OK


# --- parser ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="append a human-readable table")

    p = argparse.ArgumentParser(prog="kgatelock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    lk = sub.add_parser("lock", parents=[common], help="lock a bench netlist")
    lk.add_argument("--bench", required=True)
    lk.add_argument("--k", type=int, required=True, help="absolute-input count of locked gates")
    lk.add_argument("--gates", type=int, required=True, help="maximum number of gates to lock")
    lk.add_argument("--keys", help="comma-separated key words, e.g. 01,11,10")
    lk.add_argument("--key-bits", type=int, help="width of random key words")
    lk.add_argument("--num-keys", type=int, help="number of random key words")
    lk.add_argument("--seed", type=int, default=0)
    lk.add_argument("--static", action="store_true", help="use the first key for every row")
    lk.add_argument("--mode", choices=["absolute", "direct"], default="absolute")
    lk.add_argument("--select", choices=["dynamic-first", "topological"],
                    default="dynamic-first")
    lk.add_argument("--key-prefix", default="keyinput")
    lk.add_argument("--out", required=True)
    lk.add_argument("--schedule", required=True)
    lk.set_defaults(func=cmd_lock)

    vf = sub.add_parser("verify", parents=[common], help="check a locked netlist against the "
                        "original under its key schedule")
    vf.add_argument("--orig", required=True)
    vf.add_argument("--locked", required=True)
    vf.add_argument("--schedule", required=True)
    grp = vf.add_mutually_exclusive_group()
    grp.add_argument("--exhaustive", action="store_true")
    grp.add_argument("--samples", type=int)
    vf.add_argument("--seed", type=int, default=0)
    vf.set_defaults(func=cmd_verify)

    at = sub.add_parser("attack", help="oracle-guided attacks")
    atsub = at.add_subparsers(dest="attack", required=True)
    sat = atsub.add_parser("sat", parents=[common], help="distinguishing-input SAT attack")
    sat.add_argument("--locked", required=True)
    sat.add_argument("--oracle", required=True, help="bench file simulated as the oracle")
    sat.add_argument("--max-iter", type=int)
    sat.add_argument("--timeout", type=float, help="seconds")
    sat.add_argument("--seed", type=int)
    sat.add_argument("--samples", type=int, default=10_000,
                     help="random patterns for key verification")
    sat.add_argument("--key-prefix", default="keyinput")
    sat.add_argument("--dimacs", help="write the initial miter CNF here")
    sat.set_defaults(func=cmd_attack_sat)
    br = atsub.add_parser("brute", parents=[common], help="enumerate every (input, key) pair")
    br.add_argument("--locked", required=True)
    br.add_argument("--oracle", required=True)
    br.add_argument("--schedule-out", required=True)
    br.add_argument("--key-prefix", default="keyinput")
    br.set_defaults(func=cmd_attack_brute)

    st = sub.add_parser("stats", parents=[common], help="structural overhead of a lock")
    st.add_argument("--orig", required=True)
    st.add_argument("--locked", required=True)
    st.set_defaults(func=cmd_stats)

    sc = sub.add_parser("schedule", help="key schedule queries")
    scsub = sc.add_subparsers(dest="schedule_cmd", required=True)
    kf = scsub.add_parser("keyfor", parents=[common], help="key required by one input pattern")
    kf.add_argument("--schedule", required=True)
    kf.add_argument("--input", required=True, help="bit string in schedule input order")
    kf.add_argument("--bench", help="original netlist; needed for direct-mode schedules")
    kf.set_defaults(func=cmd_schedule)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoEligibleGates as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NO_GATES
    except (NetlistError, ScheduleFormatError, LockError, InterfaceError, AttackError,
            UsageError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
