"""Simulation, scheduled-key evaluation and functional verification.

Vectors are aligned to ``Circuit.comb_inputs`` / ``Circuit.comb_outputs``
(primary I/O followed by latch boundaries). Batch routines take numpy bool
matrices with one row per pattern; column 0 is the most significant bit
when a pattern is read as an integer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .locking import KeySchedule
from .netlist import Circuit

MAX_EXHAUSTIVE_INPUTS = 20
CHUNK = 1 << 14


class InterfaceError(ValueError):
    """Circuits, schedules or vectors that do not line up."""


@dataclass(frozen=True)
class Budget:
    exhaustive: bool = False
    samples: int = 10_000
    seed: int = 0

    @classmethod
    def auto(cls, n: int, samples: int = 10_000, seed: int = 0) -> "Budget":
        """Exhaustive when that is no more work than sampling."""
        return cls(exhaustive=(1 << n) <= max(samples, 1 << 16), samples=samples, seed=seed)


def bits_of(value: int, width: int) -> tuple[int, ...]:
    return tuple(value >> (width - 1 - i) & 1 for i in range(width))


def int_of(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = out << 1 | int(b)
    return out


def parse_bits(text: str) -> tuple[int, ...]:
    if set(text) - {"0", "1"}:
        raise ValueError(f"not a bit string: {text!r}")
    return tuple(int(ch) for ch in text)


def fmt_bits(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def all_patterns(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    stop = 1 << n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(bool)


def pattern_chunks(n: int, budget: Budget):
    """Yield bool matrices covering the budget's input patterns."""
    if budget.exhaustive:
        if n > MAX_EXHAUSTIVE_INPUTS:
            raise ValueError(f"exhaustive checking limited to {MAX_EXHAUSTIVE_INPUTS} inputs, "
                             f"got {n}")
        total = 1 << n
        for start in range(0, total, CHUNK):
            yield all_patterns(n, start, min(total, start + CHUNK))
    else:
        rng = np.random.default_rng(budget.seed)
        left = budget.samples
        while left > 0:
            size = min(left, CHUNK)
            yield rng.integers(0, 2, size=(size, n), dtype=np.uint8).astype(bool)
            left -= size


# --- simulation ---

def net_values(c: Circuit, columns: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    values = dict(columns)
    for g in c.topo:
        values[g.output] = g.kind.eval([values[f] for f in g.fanin])
    return values


def simulate_batch(c: Circuit, patterns: np.ndarray) -> np.ndarray:
    patterns = np.asarray(patterns, dtype=bool)
    if patterns.ndim != 2 or patterns.shape[1] != len(c.comb_inputs):
        raise InterfaceError(f"{c.name}: expected {len(c.comb_inputs)} input columns, "
                             f"got shape {patterns.shape}")
    values = net_values(c, {n: patterns[:, i] for i, n in enumerate(c.comb_inputs)})
    if not c.comb_outputs:
        return np.zeros((patterns.shape[0], 0), dtype=bool)
    return np.stack([values[o] for o in c.comb_outputs], axis=1)


def simulate(c: Circuit, a: Sequence[int]) -> tuple[int, ...]:
    if len(a) != len(c.comb_inputs):
        raise InterfaceError(f"{c.name}: expected {len(c.comb_inputs)} input bits, got {len(a)}")
    out = simulate_batch(c, np.array([a], dtype=bool))
    return tuple(int(b) for b in out[0])


class SimOracle:
    """An activated chip stand-in: answers queries by simulating ``circuit``."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.queries = 0

    @property
    def inputs(self) -> tuple[str, ...]:
        return self.circuit.comb_inputs

    def __call__(self, x: Sequence[int]) -> tuple[int, ...]:
        self.queries += 1
        return simulate(self.circuit, x)

    def batch(self, patterns: np.ndarray) -> np.ndarray:
        self.queries += len(patterns)
        return simulate_batch(self.circuit, patterns)


# --- key schedules ---

def _var_columns(s: KeySchedule, patterns: np.ndarray, circuit: Circuit | None):
    cols = {n: patterns[:, i] for i, n in enumerate(s.inputs)}
    needed = {v for spec in s.specs for v in spec.vars}
    if needed - cols.keys():
        if circuit is None:
            raise InterfaceError("schedule uses internal nets "
                                 f"{sorted(needed - cols.keys())}; pass the original circuit")
        if tuple(circuit.comb_inputs) != tuple(s.inputs):
            raise InterfaceError("circuit inputs do not match the schedule")
        cols = net_values(circuit, cols)
    return cols


def key_for_batch(s: KeySchedule, patterns: np.ndarray,
                  circuit: Circuit | None = None) -> np.ndarray:
    patterns = np.asarray(patterns, dtype=bool)
    if patterns.shape[1] != len(s.inputs):
        raise InterfaceError(f"expected {len(s.inputs)} input bits, got {patterns.shape[1]}")
    cols = _var_columns(s, patterns, circuit)
    parts = []
    for spec in s.specs:
        k = len(spec.vars)
        row = np.zeros(len(patterns), dtype=np.int64)
        for j, v in enumerate(spec.vars):
            row |= cols[v].astype(np.int64) << (k - 1 - j)
        table = np.array([[ch == "1" for ch in key] for key in spec.row_keys], dtype=bool)
        parts.append(table[row])
    if not parts:
        return np.zeros((len(patterns), 0), dtype=bool)
    return np.concatenate(parts, axis=1)


def key_for(s: KeySchedule, x: Sequence[int], circuit: Circuit | None = None) -> tuple[int, ...]:
    """Key vector (in ``s.key_inputs`` order) that input pattern ``x`` requires."""
    if len(x) != len(s.inputs):
        raise InterfaceError(f"expected {len(s.inputs)} input bits, got {len(x)}")
    out = key_for_batch(s, np.array([x], dtype=bool), circuit)
    return tuple(int(b) for b in out[0])


def _locked_layout(locked: Circuit, data_inputs: Sequence[str], key_inputs: Sequence[str]):
    """Column positions of data and key inputs within ``locked.comb_inputs``."""
    pos = {n: i for i, n in enumerate(locked.comb_inputs)}
    missing = [n for n in list(key_inputs) + list(data_inputs) if n not in pos]
    if missing:
        raise InterfaceError(f"{locked.name} lacks inputs {missing[:5]}")
    if len(data_inputs) + len(key_inputs) != len(pos):
        raise InterfaceError(f"{locked.name} has inputs beyond data and key inputs")
    return [pos[n] for n in data_inputs], [pos[n] for n in key_inputs]


def apply_keys(locked: Circuit, data_inputs, key_inputs, x: np.ndarray, keys: np.ndarray):
    dpos, kpos = _locked_layout(locked, data_inputs, key_inputs)
    full = np.zeros((len(x), len(locked.comb_inputs)), dtype=bool)
    full[:, dpos] = x
    full[:, kpos] = keys
    return simulate_batch(locked, full)


def scheduled_sim_batch(locked: Circuit, s: KeySchedule, patterns: np.ndarray,
                        circuit: Circuit | None = None) -> np.ndarray:
    keys = key_for_batch(s, patterns, circuit)
    return apply_keys(locked, s.inputs, s.key_inputs, patterns, keys)


def scheduled_sim(locked: Circuit, s: KeySchedule, x: Sequence[int],
                  circuit: Circuit | None = None) -> tuple[int, ...]:
    out = scheduled_sim_batch(locked, s, np.array([x], dtype=bool), circuit)
    return tuple(int(b) for b in out[0])


# --- verification ---

@dataclass
class EquivResult:
    equivalent: bool
    tested: int
    counterexample: tuple | None = None  # (x, original outputs, locked outputs)


def equiv_check(orig: Circuit, locked: Circuit, s: KeySchedule,
                budget: Budget = Budget(exhaustive=True)) -> EquivResult:
    if tuple(s.inputs) != tuple(orig.comb_inputs):
        raise InterfaceError("schedule inputs do not match the original circuit")
    _locked_layout(locked, orig.comb_inputs, s.key_inputs)
    if len(locked.comb_outputs) != len(orig.comb_outputs):
        raise InterfaceError("original and locked circuits have different outputs")
    tested = 0
    for x in pattern_chunks(len(orig.comb_inputs), budget):
        want = simulate_batch(orig, x)
        got = scheduled_sim_batch(locked, s, x, orig)
        bad = np.flatnonzero((want != got).any(axis=1))
        if bad.size:
            i = bad[0]
            cex = (fmt_bits(x[i]), fmt_bits(want[i]), fmt_bits(got[i]))
            return EquivResult(False, tested + int(i) + 1, cex)
        tested += len(x)
    return EquivResult(True, tested)


@dataclass
class CorruptionReport:
    pattern_rate: float  # fraction of patterns with at least one wrong output
    bit_rate: float  # fraction of wrong output bits
    tested: int


def corruption_report(orig, locked: Circuit, fixed_key: Sequence[int],
                      budget: Budget | None = None,
                      key_inputs: Sequence[str] | None = None) -> CorruptionReport:
    """Compare ``locked`` under one fixed key against ``orig``.

    ``orig`` may be a Circuit or anything with ``inputs`` and ``batch`` like
    :class:`SimOracle`.
    """
    oracle = orig if hasattr(orig, "batch") else SimOracle(orig)
    data = tuple(oracle.inputs)
    if key_inputs is None:
        key_inputs = tuple(n for n in locked.comb_inputs if n not in set(data))
    if len(fixed_key) != len(key_inputs):
        raise InterfaceError(f"key has {len(fixed_key)} bits, circuit has "
                             f"{len(key_inputs)} key inputs")
    budget = budget or Budget.auto(len(data))
    key_row = np.array(fixed_key, dtype=bool)
    tested = bad_patterns = bad_bits = 0
    width = 0
    for x in pattern_chunks(len(data), budget):
        want = oracle.batch(x)
        got = apply_keys(locked, data, key_inputs, x, np.broadcast_to(key_row, (len(x), len(key_row))))
        diff = want != got
        width = diff.shape[1]
        bad_patterns += int(diff.any(axis=1).sum())
        bad_bits += int(diff.sum())
        tested += len(x)
    if tested == 0:
        return CorruptionReport(0.0, 0.0, 0)
    return CorruptionReport(bad_patterns / tested,
                            bad_bits / (tested * width) if width else 0.0, tested)


def corruption_rate(orig, locked: Circuit, fixed_key: Sequence[int],
                    budget: Budget | None = None,
                    key_inputs: Sequence[str] | None = None) -> float:
    return corruption_report(orig, locked, fixed_key, budget, key_inputs).pattern_rate
