"""K-Gate Lock: per-input-pattern keys encoded into selected gates.

Each locked gate is rebuilt from an onset over ``key_inputs ++ vars``: row
``p`` of the gate's truth table keeps its 1 only when the key inputs carry
``row_keys[p]``. Any other key drives the gate to 0, so the correct key is
a function of the inputs rather than a constant.
"""
from __future__ import annotations

import itertools
import logging
import random
import warnings
from dataclasses import dataclass, field
from typing import Sequence

from .logic2lvl import Cover, TruthTable, cone_table, cover_to_gates, qm_minimize
from .netlist import GENERATED_PREFIX, Circuit, Gate, eligible_gates

log = logging.getLogger(__name__)

MAX_WHOLE_INPUTS = 16
# above this many cover variables lock_whole keeps the raw minterm cover
MAX_MINIMIZE_VARS = 12


class LockError(ValueError):
    pass


class NoEligibleGates(LockError):
    pass


@dataclass(frozen=True)
class GateKeySpec:
    gate: str
    vars: tuple[str, ...]
    key_inputs: tuple[str, ...]
    row_keys: tuple[str, ...]  # bitstrings, index = assignment of vars (vars[0] MSB)

    def __post_init__(self):
        if len(self.row_keys) != 1 << len(self.vars):
            raise ValueError(f"gate {self.gate}: need {1 << len(self.vars)} row keys, "
                             f"got {len(self.row_keys)}")
        for key in self.row_keys:
            if len(key) != len(self.key_inputs) or set(key) - {"0", "1"}:
                raise ValueError(f"gate {self.gate}: bad key word {key!r} for width "
                                 f"{len(self.key_inputs)}")

    @property
    def width(self) -> int:
        return len(self.key_inputs)


@dataclass(frozen=True)
class KeySchedule:
    circuit: str
    inputs: tuple[str, ...]  # original (pseudo-)primary inputs, the bit order of x
    specs: tuple[GateKeySpec, ...] = ()

    def __post_init__(self):
        names = self.key_inputs
        if len(set(names)) != len(names):
            raise ValueError("key input names must be unique")

    @property
    def key_inputs(self) -> tuple[str, ...]:
        return tuple(n for s in self.specs for n in s.key_inputs)

    @property
    def m(self) -> int:
        return sum(s.width for s in self.specs)


@dataclass
class LockConfig:
    k: int = 2
    g: int = 1
    keys: Sequence[str] = ()
    mode: str = "absolute"  # or "direct"
    # "dynamic-first" prefers eligible gates whose onset rows get >= 2 distinct
    # keys, then topological order; "topological" takes the first g eligible
    select: str = "dynamic-first"
    static: bool = False
    seed: int = 0
    key_prefix: str = "keyinput"
    # used only when ``keys`` is empty
    key_bits: int | None = None
    num_keys: int | None = None
    gate_keys: dict[str, Sequence[str]] = field(default_factory=dict)

    def resolved_keys(self) -> list[str]:
        if self.keys:
            return list(self.keys)
        if self.key_bits is None or self.num_keys is None:
            raise LockError("either keys or key_bits and num_keys must be given")
        return random_keys(self.key_bits, self.num_keys, self.seed)


@dataclass
class LockReport:
    locked_gates: list[str]
    key_input_count: int
    original_cell_count: int
    locked_cell_count: int
    onset_sizes: dict[str, int]
    skipped_gates: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def locked_gate_count(self) -> int:
        return len(self.locked_gates)

    @property
    def added_cell_count(self) -> int:
        return self.locked_cell_count - self.original_cell_count


def check_keys(keys: Sequence[str]) -> int:
    """Validate a key list and return its common width."""
    if not keys:
        raise LockError("at least one key is required")
    widths = {len(k) for k in keys}
    if len(widths) != 1 or any(set(k) - {"0", "1"} for k in keys):
        raise LockError(f"keys must be 0/1 strings of one width, got {list(keys)}")
    w = widths.pop()
    if w < 1:
        raise LockError("key width must be >= 1")
    return w


def random_keys(width: int, t: int, seed: int) -> list[str]:
    if width < 1 or t < 1:
        raise ValueError("width and t must be >= 1")
    rng = random.Random(seed)
    return [format(rng.getrandbits(width), f"0{width}b") for _ in range(t)]


def build_row_keys(keys: Sequence[str], rows: int, static: bool = False) -> list[str]:
    if not 1 <= len(keys) <= rows:
        raise LockError(f"{len(keys)} keys do not fit a truth table of {rows} rows")
    if static:
        return [keys[0]] * rows
    return [keys[i % len(keys)] for i in range(rows)]


def locked_onset(spec: GateKeySpec, tt: TruthTable) -> list[int]:
    """Minterms over ``key_inputs ++ vars``: one per onset row, keyed by its row key."""
    if tt.vars != spec.vars:
        raise LockError(f"truth table vars {tt.vars} do not match spec vars {spec.vars}")
    k = len(spec.vars)
    return [int(spec.row_keys[p], 2) << k | p for p in tt.onset]


def _namer(prefix: str, taken) -> "itertools.count":
    def fresh():
        for i in itertools.count():
            name = f"{prefix}{i}"
            if name not in taken:
                taken.add(name)
                return name
    return fresh


def lock_gate(c: Circuit, gate: Gate, spec: GateKeySpec, tt: TruthTable,
              fresh=None) -> list[Gate]:
    onset = locked_onset(spec, tt)
    if not onset:
        warnings.warn(f"gate {gate.output} has an empty onset; locked as constant 0")
    cov = qm_minimize(onset, spec.key_inputs + spec.vars)
    if fresh is None:
        fresh = _namer(f"{GENERATED_PREFIX}{gate.output}_", set(c.nets))
    return cover_to_gates(cov, gate.output, fresh)


def gate_table(gate: Gate) -> TruthTable:
    """Local truth table of a gate over its direct fan-ins."""
    v = len(gate.fanin)
    bits = []
    for i in range(1 << v):
        vals = [i >> (v - 1 - j) & 1 for j in range(v)]
        bits.append(gate.kind.eval(vals, 1))
    return TruthTable(gate.fanin, tuple(bits))


def _sweep(gates: list[Gate], roots: Sequence[str]) -> list[Gate]:
    """Drop gates that no longer reach any root net."""
    driver = {g.output: g for g in gates}
    live = set()
    stack = list(roots)
    while stack:
        n = stack.pop()
        if n in live:
            continue
        live.add(n)
        g = driver.get(n)
        if g is not None:
            stack.extend(g.fanin)
    return [g for g in gates if g.output in live]


def lock_circuit(c: Circuit, cfg: LockConfig) -> tuple[Circuit, KeySchedule, LockReport]:
    if cfg.mode not in ("absolute", "direct"):
        raise LockError(f"unknown mode {cfg.mode!r}")
    keys = cfg.resolved_keys()
    rows = 1 << cfg.k
    if cfg.select not in ("dynamic-first", "topological"):
        raise LockError(f"unknown selection policy {cfg.select!r}")
    candidates = eligible_gates(c, cfg.k, max(1, len(c.gates)))
    if not candidates:
        raise NoEligibleGates(f"no gate of {c.name} has {cfg.k} absolute inputs")

    plans = []
    for gate in candidates:
        gkeys = list(cfg.gate_keys.get(gate.output, keys))
        check_keys(gkeys)
        row_keys = build_row_keys(gkeys, rows, cfg.static)
        if cfg.mode == "absolute":
            mask = c.supports[gate.output]
            vars = tuple(n for i, n in enumerate(c.comb_inputs) if mask >> i & 1)
            tt = cone_table(c, gate.output, vars)
        elif len(gate.fanin) == cfg.k and len(set(gate.fanin)) == cfg.k:
            tt = gate_table(gate)
        else:
            tt = None  # not lockable in direct mode; an error if selected
        plans.append((gate, gkeys, row_keys, tt))
        if cfg.select == "topological" and len(plans) == cfg.g:
            break

    skipped = []
    if cfg.select == "dynamic-first":
        # a gate whose onset rows all carry one key is a plain single-key lock
        def dynamic(plan):
            _, _, row_keys, tt = plan
            return tt is not None and len({row_keys[p] for p in tt.onset}) >= 2
        ranked = sorted(range(len(plans)), key=lambda i: (not dynamic(plans[i]), i))
        chosen = set(ranked[:cfg.g])
        cutoff = max(chosen)
        skipped = [(plans[i][0].output, "single key over its onset under this schedule")
                   for i in range(cutoff) if i not in chosen]
        plans = [p for i, p in enumerate(plans) if i in chosen]

    for gate, _, _, tt in plans:
        if tt is None:
            raise LockError(f"direct mode needs {cfg.k} distinct fan-ins on "
                            f"{gate.output}, it has {list(gate.fanin)}")

    report_warnings = []
    taken = set(c.nets)
    specs = []
    replacement: dict[str, list[Gate]] = {}
    onset_sizes = {}
    key_index = 0
    for gate, gkeys, row_keys, tt in plans:
        w = len(gkeys[0])
        if len(set(gkeys)) != len(gkeys):
            report_warnings.append(f"{gate.output}: duplicate keys in {gkeys}")
        key_names = tuple(f"{cfg.key_prefix}{key_index + j}" for j in range(w))
        key_index += w
        clash = [n for n in key_names if n in taken]
        if clash:
            raise LockError(f"key input name collision: {clash}")
        taken.update(key_names)
        spec = GateKeySpec(gate.output, tt.vars, key_names, tuple(row_keys))
        onset_sizes[gate.output] = len(tt.onset)
        if not tt.onset:
            report_warnings.append(f"{gate.output}: empty onset, locked as constant 0")
        fresh = _namer(f"{GENERATED_PREFIX}{gate.output}_", taken)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            replacement[gate.output] = lock_gate(c, gate, spec, tt, fresh)
        specs.append(spec)

    gates: list[Gate] = []
    for g in c.gates:
        gates.extend(replacement.get(g.output, [g]))
    locked_nets = {g.output for new in replacement.values() for g in new}
    roots = list(c.outputs) + [l.input for l in c.latches] + sorted(locked_nets)
    gates = _sweep(gates, roots)
    key_inputs = tuple(n for s in specs for n in s.key_inputs)
    locked = c.replace(inputs=c.inputs + key_inputs, gates=tuple(gates))
    schedule = KeySchedule(c.name, c.comb_inputs, tuple(specs))
    report = LockReport(
        locked_gates=[s.gate for s in specs],
        key_input_count=schedule.m,
        original_cell_count=len(c.gates),
        locked_cell_count=len(locked.gates),
        onset_sizes=onset_sizes,
        skipped_gates=skipped,
        warnings=report_warnings,
    )
    for w in report_warnings:
        log.info(w)
    return locked, schedule, report


def lock_whole(c: Circuit, keys: Sequence[str],
               key_prefix: str = "keyinput") -> tuple[Circuit, KeySchedule]:
    """Rebuild every output from its full truth table over all inputs.

    Exponential in the input count, so limited to small circuits.
    """
    n = len(c.comb_inputs)
    if n > MAX_WHOLE_INPUTS:
        raise LockError(f"whole-circuit locking is limited to {MAX_WHOLE_INPUTS} inputs, "
                        f"{c.name} has {n}")
    w = check_keys(keys)
    row_keys = build_row_keys(list(keys), 1 << n)
    taken = set(c.nets)
    rename: dict[str, str] = {}
    new_defs: dict[str, list[Gate]] = {}
    extra: list[Gate] = []
    specs = []
    for idx, net in enumerate(dict.fromkeys(c.comb_outputs)):
        tt = cone_table(c, net, c.comb_inputs)
        key_names = tuple(f"{key_prefix}{idx * w + j}" for j in range(w))
        clash = [k for k in key_names if k in taken]
        if clash:
            raise LockError(f"key input name collision: {clash}")
        taken.update(key_names)
        spec = GateKeySpec(net, c.comb_inputs, key_names, tuple(row_keys))
        onset = locked_onset(spec, tt)
        vars = key_names + c.comb_inputs
        if len(vars) <= MAX_MINIMIZE_VARS:
            cov = qm_minimize(onset, vars)
        else:
            cov = Cover(vars, tuple(format(m, f"0{len(vars)}b") for m in onset))
        out = net
        if net not in c.driver:  # output wired straight to an input
            out = f"{GENERATED_PREFIX}whole_{net}"
            rename[net] = out
            taken.add(out)
        fresh = _namer(f"{GENERATED_PREFIX}{out}_", taken)
        built = cover_to_gates(cov, out, fresh)
        if out in c.driver:
            new_defs[out] = built
        else:
            extra.extend(built)
        specs.append(spec)

    gates: list[Gate] = []
    for g in c.gates:
        gates.extend(new_defs.get(g.output, [g]))
    gates.extend(extra)
    outputs = tuple(rename.get(o, o) for o in c.outputs)
    latches = tuple(type(l)(l.output, rename.get(l.input, l.input)) for l in c.latches)
    gates = _sweep(gates, list(outputs) + [l.input for l in latches])
    key_inputs = tuple(k for s in specs for k in s.key_inputs)
    locked = c.replace(inputs=c.inputs + key_inputs, outputs=outputs, latches=latches,
                       gates=tuple(gates))
    return locked, KeySchedule(c.name, c.comb_inputs, tuple(specs))


# --- schedule file ---

SCHEDULE_MAGIC = "kgate-schedule v1"


def write_schedule(s: KeySchedule) -> str:
    out = [SCHEDULE_MAGIC, f"circuit {s.circuit}", "inputs " + " ".join(s.inputs)]
    for spec in s.specs:
        k = len(spec.vars)
        out.append(f"gate {spec.gate} width {spec.width}")
        out.append("  keyinputs " + " ".join(spec.key_inputs))
        out.append("  vars " + " ".join(spec.vars))
        for p, key in enumerate(spec.row_keys):
            out.append(f"  row {p:0{k}b} key {key}")
    return "\n".join(out) + "\n"


class ScheduleFormatError(ValueError):
    pass


def parse_schedule(text: str) -> KeySchedule:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != SCHEDULE_MAGIC:
        raise ScheduleFormatError(f"missing {SCHEDULE_MAGIC!r} header")
    circuit, inputs = "", ()
    specs = []
    cur = None

    def close():
        if cur is not None:
            rows = [key for _, key in sorted(cur["rows"])]
            pats = sorted(p for p, _ in cur["rows"])
            if pats != list(range(1 << len(cur["vars"]))):
                raise ScheduleFormatError(f"gate {cur['gate']}: rows incomplete")
            if cur["width"] != len(cur["keyinputs"]):
                raise ScheduleFormatError(f"gate {cur['gate']}: width does not match keyinputs")
            try:
                specs.append(GateKeySpec(cur["gate"], cur["vars"], cur["keyinputs"], tuple(rows)))
            except ValueError as e:
                raise ScheduleFormatError(str(e)) from None

    for ln in lines[1:]:
        parts = ln.split()
        head = parts[0]
        if head == "circuit":
            circuit = " ".join(parts[1:])
        elif head == "inputs":
            inputs = tuple(parts[1:])
        elif head == "gate":
            close()
            if len(parts) != 4 or parts[2] != "width":
                raise ScheduleFormatError(f"bad gate line {ln!r}")
            cur = {"gate": parts[1], "width": int(parts[3]), "keyinputs": (), "vars": (),
                   "rows": []}
        elif cur is None:
            raise ScheduleFormatError(f"unexpected line {ln!r}")
        elif head == "keyinputs":
            cur["keyinputs"] = tuple(parts[1:])
        elif head == "vars":
            cur["vars"] = tuple(parts[1:])
        elif head == "row":
            if len(parts) != 4 or parts[2] != "key" or len(parts[1]) != len(cur["vars"]):
                raise ScheduleFormatError(f"bad row line {ln!r}")
            cur["rows"].append((int(parts[1], 2), parts[3]))
        else:
            raise ScheduleFormatError(f"unknown directive {head!r}")
    close()
    try:
        return KeySchedule(circuit, inputs, tuple(specs))
    except ValueError as e:
        raise ScheduleFormatError(str(e)) from None
