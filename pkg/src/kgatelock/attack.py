"""Oracle-guided security evaluation of locked netlists.

Contains the Tseitin encoder, a decision-procedure wrapper (CDCL via
python-sat, plus a small DPLL kept for cross-checking), the classic
distinguishing-input SAT attack, key verification and the exhaustive
multi-key brute force.
"""
from __future__ import annotations

import enum
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from pysat.solvers import Solver

from .netlist import Circuit, GateKind
from .simeval import (Budget, InterfaceError, SimOracle, all_patterns, apply_keys,
                      bits_of, corruption_report, fmt_bits)

DEFAULT_SOLVER = "g4"  # Glucose 4: incremental, interruptible
MAX_BRUTE_BITS = 24


class AttackError(ValueError):
    pass


class SolverTimeout(RuntimeError):
    pass


# --- CNF ---

@dataclass
class CnfFormula:
    nvars: int = 0
    clauses: list[list[int]] = field(default_factory=list)
    varmap: dict[str, int] = field(default_factory=dict)

    def new_var(self, name: str | None = None) -> int:
        self.nvars += 1
        if name is not None:
            self.varmap[name] = self.nvars
        return self.nvars

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.nvars} {len(self.clauses)}"]
        lines += [" ".join(map(str, cl)) + " 0" for cl in self.clauses]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    f = CnfFormula()
    lits: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "c%":
            continue
        if line.startswith("p"):
            f.nvars = int(line.split()[2])
            continue
        for tok in line.split():
            v = int(tok)
            if v == 0:
                f.clauses.append(lits)
                lits = []
            else:
                lits.append(v)
    if lits:
        f.clauses.append(lits)
    return f


def _and(out: int, ins: Sequence[int]) -> list[list[int]]:
    return [[-out, a] for a in ins] + [[out] + [-a for a in ins]]


def _or(out: int, ins: Sequence[int]) -> list[list[int]]:
    return [[out, -a] for a in ins] + [[-out] + list(ins)]


def _xor2(out: int, a: int, b: int) -> list[list[int]]:
    return [[-out, a, b], [-out, -a, -b], [out, -a, b], [out, a, -b]]


def encode_circuit(f: CnfFormula, c: Circuit, prefix: str = "",
                   bind: dict[str, int] | None = None,
                   consts: dict[str, int] | None = None,
                   clauses: list | None = None) -> dict[str, int | bool]:
    """Append a Tseitin copy of ``c`` to ``f`` and return net -> literal.

    ``bind`` ties inputs to existing literals (shared between copies).
    ``consts`` fixes inputs to constants; gates are then folded, so a net
    may map to ``True``/``False`` or alias another literal. Without
    ``consts`` every gate gets its own variable.
    """
    sink = f.clauses if clauses is None else clauses
    bind = bind or {}
    consts = consts or {}
    fold = bool(consts)
    val: dict[str, int | bool] = {}
    for n in c.comb_inputs:
        if n in consts:
            val[n] = bool(consts[n])
        elif n in bind:
            val[n] = bind[n]
        else:
            val[n] = f.new_var(prefix + n)

    for g in c.topo:
        ins = [val[x] for x in g.fanin]
        name = prefix + g.output
        kind = g.kind
        if not fold:
            out = f.new_var(name)
            if kind is GateKind.BUF:
                sink += [[-out, ins[0]], [out, -ins[0]]]
            elif kind is GateKind.NOT:
                sink += [[out, ins[0]], [-out, -ins[0]]]
            elif kind in (GateKind.AND, GateKind.NAND):
                sink += _and(out if kind is GateKind.AND else -out, ins)
            elif kind in (GateKind.OR, GateKind.NOR):
                sink += _or(out if kind is GateKind.OR else -out, ins)
            else:
                acc = ins[0]
                for i, b in enumerate(ins[1:], start=2):
                    last = i == len(ins)
                    if last:
                        t = out if kind is GateKind.XOR else -out
                    else:
                        t = f.new_var()
                    sink += _xor2(t, acc, b)
                    acc = t
            val[g.output] = out
            continue

        # constant folding
        if kind in (GateKind.BUF, GateKind.NOT):
            v = ins[0]
            neg = kind is GateKind.NOT
            val[g.output] = (not v if neg else v) if isinstance(v, bool) else (-v if neg else v)
            continue
        if kind in (GateKind.XOR, GateKind.XNOR):
            parity = kind is GateKind.XNOR
            lits = []
            for v in ins:
                if isinstance(v, bool):
                    parity ^= v
                else:
                    lits.append(v)
            if not lits:
                val[g.output] = parity
                continue
            acc = lits[0]
            for b in lits[1:]:
                t = f.new_var()
                sink += _xor2(t, acc, b)
                acc = t
            val[g.output] = -acc if parity else acc
            continue
        is_and = kind in (GateKind.AND, GateKind.NAND)
        inverted = kind in (GateKind.NAND, GateKind.NOR)
        controlling = not is_and  # 0 controls AND, 1 controls OR
        if any(v is controlling for v in ins):
            val[g.output] = controlling ^ inverted
            continue
        lits = [v for v in ins if not isinstance(v, bool)]
        if not lits:
            val[g.output] = (not controlling) ^ inverted
            continue
        if len(lits) == 1:
            out = lits[0]
        else:
            out = f.new_var(name)
            sink += _and(out, lits) if is_and else _or(out, lits)
        val[g.output] = -out if inverted else out
    return val


def tseitin(c: Circuit, prefix: str = "") -> CnfFormula:
    f = CnfFormula()
    encode_circuit(f, c, prefix)
    return f


# --- decision procedure ---

@dataclass
class SatResult:
    sat: bool
    model: dict[int, bool] | None = None


def _solve(solver: Solver, assumptions=(), deadline: float | None = None):
    """Return True/False, or None when the deadline passes."""
    if deadline is None:
        return solver.solve(assumptions=list(assumptions))
    remaining = deadline - time.monotonic()
    if remaining <= 0:
        return None
    timer = threading.Timer(remaining, solver.interrupt)
    timer.start()
    try:
        return solver.solve_limited(assumptions=list(assumptions), expect_interrupt=True)
    finally:
        timer.cancel()
        solver.clear_interrupt()


def _model(solver: Solver, nvars: int) -> dict[int, bool]:
    raw = solver.get_model() or []
    model = {v: False for v in range(1, nvars + 1)}
    for lit in raw:
        model[abs(lit)] = lit > 0
    return model


def _dpll(clauses: list[list[int]], assign: dict[int, bool]) -> dict[int, bool] | None:
    assign = dict(assign)
    clauses = [list(c) for c in clauses]
    while True:
        unit = None
        simplified = []
        for cl in clauses:
            if any(assign.get(abs(l)) == (l > 0) for l in cl):
                continue
            rest = [l for l in cl if abs(l) not in assign]
            if not rest:
                return None
            if len(rest) == 1 and unit is None:
                unit = rest[0]
            simplified.append(rest)
        clauses = simplified
        if unit is None:
            break
        assign[abs(unit)] = unit > 0
    if not clauses:
        return assign
    v = abs(clauses[0][0])
    for choice in (True, False):
        res = _dpll(clauses, {**assign, v: choice})
        if res is not None:
            return res
    return None


def sat_decide(f: CnfFormula, assumptions: Sequence[int] = (), *,
               timeout: float | None = None, engine: str = "cdcl",
               solver: str = DEFAULT_SOLVER) -> SatResult:
    if engine == "dpll":
        clauses = list(f.clauses) + [[a] for a in assumptions]
        res = _dpll(clauses, {})
        if res is None:
            return SatResult(False)
        return SatResult(True, {v: res.get(v, False) for v in range(1, f.nvars + 1)})
    if engine != "cdcl":
        raise ValueError(f"unknown engine {engine!r}")
    if any(not cl for cl in f.clauses):
        return SatResult(False)
    deadline = None if timeout is None else time.monotonic() + timeout
    with Solver(name=solver, bootstrap_with=f.clauses) as s:
        res = _solve(s, assumptions, deadline)
        if res is None:
            raise SolverTimeout(f"no decision within {timeout} s")
        return SatResult(True, _model(s, f.nvars)) if res else SatResult(False)


# --- attack ---

class AttackStatus(str, enum.Enum):
    KEY_CANDIDATE = "KeyCandidate"
    NO_KEY_EXISTS = "NoKeyExists"  # "condition not solvable"
    ITERATION_LIMIT = "IterationLimit"
    TIMEOUT = "Timeout"


@dataclass
class AttackResult:
    status: AttackStatus
    key: tuple[int, ...] | None
    key_inputs: tuple[str, ...]
    iterations: int
    dips: list[tuple[tuple[int, ...], tuple[int, ...]]]
    elapsed: float
    verified: bool | None = None
    corruption: float | None = None

    @property
    def key_bits(self) -> str | None:
        return None if self.key is None else fmt_bits(self.key)


def split_inputs(locked: Circuit, key_inputs: Sequence[str] | None = None,
                 key_prefix: str = "keyinput") -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(data inputs, key inputs) of a locked circuit."""
    if key_inputs is None:
        key_inputs = [n for n in locked.inputs if n.startswith(key_prefix)]
    keys = tuple(key_inputs)
    missing = set(keys) - set(locked.comb_inputs)
    if missing:
        raise InterfaceError(f"{locked.name} has no inputs {sorted(missing)[:5]}")
    ks = set(keys)
    return tuple(n for n in locked.comb_inputs if n not in ks), keys


def _check_oracle(oracle, data: Sequence[str]) -> None:
    names = getattr(oracle, "inputs", None)
    if names is not None and tuple(names) != tuple(data):
        raise InterfaceError("oracle inputs do not match the locked circuit's data inputs")


def _miter_diff(f: CnfFormula, outs_a, outs_b) -> list[int]:
    diffs = []
    for a, b in zip(outs_a, outs_b):
        d = f.new_var()
        f.clauses.extend(_xor2(d, a, b))
        diffs.append(d)
    if diffs:
        f.clauses.append(diffs)
    else:  # no outputs: two copies can never differ
        z = f.new_var()
        f.clauses += [[z], [-z]]
    return diffs


def _fix(f: CnfFormula, sink: list, lit, want: int) -> None:
    if isinstance(lit, bool):
        if lit != bool(want):
            z = f.new_var()
            sink += [[z], [-z]]
    else:
        sink.append([lit if want else -lit])


def build_miter(locked: Circuit, data: Sequence[str], keys: Sequence[str]):
    """Two copies of ``locked`` sharing data inputs, with separate key
    vectors, constrained to differ on some output.

    Returns (formula, data vars, copy-A key vars, copy-B key vars).
    """
    f = CnfFormula()
    xv = {n: f.new_var(n) for n in data}
    ka = {n: f.new_var("A:" + n) for n in keys}
    kb = {n: f.new_var("B:" + n) for n in keys}
    va = encode_circuit(f, locked, "A:", bind={**xv, **ka})
    vb = encode_circuit(f, locked, "B:", bind={**xv, **kb})
    outs = locked.comb_outputs
    _miter_diff(f, [va[o] for o in outs], [vb[o] for o in outs])
    return f, xv, ka, kb


def sat_attack(locked: Circuit, oracle: Callable[[Sequence[int]], Sequence[int]],
               key_inputs: Sequence[str] | None = None, *,
               key_prefix: str = "keyinput", max_iter: int | None = None,
               timeout: float | None = None, seed: int | None = None,
               solver: str = DEFAULT_SOLVER, tolerant: bool = False) -> AttackResult:
    """Distinguishing-input-pattern attack with a single-key model.

    ``oracle`` maps a data-input pattern (aligned to the locked circuit's
    non-key inputs) to output bits. ``seed`` randomizes the solvers' initial
    phases. ``tolerant`` accepts circuits with no key inputs.
    """
    start = time.monotonic()
    deadline = None if timeout is None else start + timeout
    data, keys = split_inputs(locked, key_inputs, key_prefix)
    if not keys and not tolerant:
        raise AttackError(f"{locked.name} has no key inputs")
    _check_oracle(oracle, data)
    outs = locked.comb_outputs

    f, xv, ka, kb = build_miter(locked, data, keys)

    miter = Solver(name=solver, bootstrap_with=f.clauses)
    cons = Solver(name=solver)
    if seed is not None:
        rng = np.random.default_rng(seed)
        lits = list(xv.values()) + list(ka.values()) + list(kb.values())
        flips = rng.integers(0, 2, size=len(lits))
        miter.set_phases([l if s else -l for l, s in zip(lits, flips)])
        cons.set_phases([l if s else -l for l, s in zip(list(ka.values()), flips[len(xv):])])

    dips: list = []

    def finish(status, key=None):
        miter.delete()
        cons.delete()
        return AttackResult(status, key, keys, len(dips), dips, time.monotonic() - start)

    while True:
        if max_iter is not None and len(dips) >= max_iter:
            return finish(AttackStatus.ITERATION_LIMIT)
        res = _solve(miter, (), deadline)
        if res is None:
            return finish(AttackStatus.TIMEOUT)
        if not res:
            break
        model = miter.get_model()
        d = tuple(int(model[xv[n] - 1] > 0) for n in data)
        o = tuple(int(b) for b in oracle(d))
        dips.append((d, o))
        consts = dict(zip(data, d))
        for kvars, target in ((ka, cons), (kb, None)):
            added: list = []
            vals = encode_circuit(f, locked, f"D{len(dips)}:", bind=kvars, consts=consts,
                                  clauses=added)
            for out, want in zip(outs, o):
                _fix(f, added, vals[out], want)
            miter.append_formula(added)
            if target is not None:
                target.append_formula(added)

    res = _solve(cons, (), deadline)
    if res is None:
        return finish(AttackStatus.TIMEOUT)
    if not res:
        return finish(AttackStatus.NO_KEY_EXISTS)
    model = cons.get_model() or []
    pos = {abs(l) for l in model if l > 0}
    return finish(AttackStatus.KEY_CANDIDATE, tuple(int(ka[n] in pos) for n in keys))


def replay_dips(locked: Circuit, result: AttackResult) -> bool:
    """Re-check the DIP log: every DIP separated two keys consistent with the
    constraints collected before it."""
    data, keys = split_inputs(locked, result.key_inputs)
    for i, (d, _) in enumerate(result.dips):
        f, xv, ka, kb = build_miter(locked, data, keys)
        outs = locked.comb_outputs
        for prev, po in result.dips[:i]:
            for kvars in (ka, kb):
                vals = encode_circuit(f, locked, "", bind=kvars, consts=dict(zip(data, prev)))
                for out, want in zip(outs, po):
                    _fix(f, f.clauses, vals[out], want)
        f.clauses += [[xv[n] if b else -xv[n]] for n, b in zip(data, d)]
        if not sat_decide(f).sat:
            return False
    return True


def _formal_equal(reference: Circuit, locked: Circuit, data, keys, key) -> bool:
    f = CnfFormula()
    xv = {n: f.new_var(n) for n in data}
    vr = encode_circuit(f, reference, "R:", bind=xv)
    vl = encode_circuit(f, locked, "L:", bind=xv, consts=dict(zip(keys, key)) or None)
    outs_r = [vr[o] for o in reference.comb_outputs]
    outs_l = []
    for o in locked.comb_outputs:
        v = vl[o]
        if isinstance(v, bool):  # pin constants to a variable for the miter
            z = f.new_var()
            f.clauses.append([z if v else -z])
            v = z
        outs_l.append(v)
    _miter_diff(f, outs_r, outs_l)
    return not sat_decide(f).sat


def verify_key(locked: Circuit, key: Sequence[int], oracle, budget: Budget | None = None,
               key_inputs: Sequence[str] | None = None, *,
               key_prefix: str = "keyinput", formal: bool = True) -> tuple[bool, float]:
    """Check a fixed key against the oracle.

    Returns (verdict, sampled corruption rate). When the oracle wraps a
    netlist and sampling finds no mismatch, a SAT miter settles the verdict
    over the whole input space.
    """
    data, keys = split_inputs(locked, key_inputs, key_prefix)
    if not hasattr(oracle, "batch"):
        raise InterfaceError("verify_key needs an oracle with batch queries, e.g. SimOracle")
    _check_oracle(oracle, data)
    budget = budget or Budget.auto(len(data))
    rep = corruption_report(oracle, locked, key, budget, keys)
    if rep.pattern_rate > 0:
        return False, rep.pattern_rate
    ref = getattr(oracle, "circuit", None)
    if formal and ref is not None and not budget.exhaustive:
        return _formal_equal(ref, locked, data, keys, key), rep.pattern_rate
    return True, rep.pattern_rate


# --- brute force over (input, key) ---

@dataclass
class RecoveredSchedule:
    circuit: str
    inputs: tuple[str, ...]
    key_inputs: tuple[str, ...]
    sets: dict[int, frozenset[int]]  # input pattern -> consistent full keys (ints, MSB first)

    def keys_for(self, x: Sequence[int]) -> set[str]:
        idx = int("".join(map(str, x)) or "0", 2)
        m = len(self.key_inputs)
        return {format(k, f"0{m}b") if m else "" for k in self.sets[idx]}

    def contains(self, x: Sequence[int], key: Sequence[int]) -> bool:
        return fmt_bits(key) in self.keys_for(x)

    def common_keys(self) -> set[str]:
        m = len(self.key_inputs)
        common = frozenset.intersection(*self.sets.values()) if self.sets else frozenset()
        return {format(k, f"0{m}b") if m else "" for k in common}

    def to_text(self) -> str:
        n = len(self.inputs)
        out = ["kgate-recovery v1", f"circuit {self.circuit}",
               "inputs " + " ".join(self.inputs), "keyinputs " + " ".join(self.key_inputs)]
        for x in sorted(self.sets):
            keys = sorted(self.keys_for(bits_of(x, n)))
            out.append(f"pattern {x:0{n}b} count {len(keys)} keys " + " ".join(keys))
        return "\n".join(out) + "\n"


def brute_force_multikey(locked: Circuit, oracle, key_inputs: Sequence[str] | None = None, *,
                         key_prefix: str = "keyinput",
                         guard: int = MAX_BRUTE_BITS) -> RecoveredSchedule:
    """Record, for every input pattern, every key that reproduces the oracle there."""
    data, keys = split_inputs(locked, key_inputs, key_prefix)
    n, m = len(data), len(keys)
    if n + m > guard:
        raise AttackError(f"brute force over {n}+{m} bits exceeds the {guard}-bit guard")
    if not hasattr(oracle, "batch"):
        raise InterfaceError("brute force needs an oracle with batch queries, e.g. SimOracle")
    _check_oracle(oracle, data)
    key_rows = all_patterns(m)
    nk = len(key_rows)
    step = max(1, (1 << 18) // nk)
    sets: dict[int, frozenset[int]] = {}
    for start in range(0, 1 << n, step):
        xs = all_patterns(n, start, min(1 << n, start + step))
        want = oracle.batch(xs)
        got = apply_keys(locked, data, keys, np.repeat(xs, nk, axis=0), np.tile(key_rows, (len(xs), 1)))
        ok = (got == np.repeat(want, nk, axis=0)).all(axis=1).reshape(len(xs), nk)
        for i, row in enumerate(ok):
            sets[start + i] = frozenset(int(k) for k in np.flatnonzero(row))
    return RecoveredSchedule(locked.name, data, keys, sets)


__all__ = [
    "AttackError", "AttackResult", "AttackStatus", "CnfFormula", "RecoveredSchedule",
    "SatResult", "SimOracle", "SolverTimeout", "brute_force_multikey", "build_miter",
    "encode_circuit", "parse_dimacs", "replay_dips", "sat_attack", "sat_decide",
    "split_inputs", "tseitin", "verify_key",
]
