"""Gate-level circuits in ISCAS ``.bench`` form.

A :class:`Circuit` is an immutable value. Flip-flops are kept as
:class:`Latch` records and cut for every combinational analysis: a latch
output behaves as a pseudo-primary input, a latch input as a pseudo-primary
output.
"""
from __future__ import annotations

import enum
import heapq
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

GENERATED_PREFIX = "kgl_"


class GateKind(str, enum.Enum):
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"
    BUF = "BUF"

    @property
    def unary(self) -> bool:
        return self in (GateKind.NOT, GateKind.BUF)

    def eval(self, values, ones=True):
        """Evaluate on operands that support ``& | ^``.

        ``ones`` is the all-true value of the operand type: ``True`` for
        numpy bool arrays, ``(1 << width) - 1`` for bit-parallel ints.
        """
        if self is GateKind.NOT:
            return values[0] ^ ones
        if self is GateKind.BUF:
            return values[0]
        acc = values[0]
        if self in (GateKind.AND, GateKind.NAND):
            for v in values[1:]:
                acc = acc & v
        elif self in (GateKind.OR, GateKind.NOR):
            for v in values[1:]:
                acc = acc | v
        else:
            for v in values[1:]:
                acc = acc ^ v
        if self in (GateKind.NAND, GateKind.NOR, GateKind.XNOR):
            return acc ^ ones
        return acc


_KIND_ALIASES = {"BUFF": GateKind.BUF}


class NetlistError(ValueError):
    """Invalid circuit structure; ``line`` is set when it came from a file."""

    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class Gate:
    output: str
    kind: GateKind
    fanin: tuple[str, ...]


@dataclass(frozen=True)
class Latch:
    output: str
    input: str


@dataclass(frozen=True)
class Circuit:
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    gates: tuple[Gate, ...]
    latches: tuple[Latch, ...] = ()
    # source line per gate output, only used for error messages
    _lines: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        validate(self)

    # --- views used by all combinational analyses ---

    @cached_property
    def comb_inputs(self) -> tuple[str, ...]:
        return self.inputs + tuple(l.output for l in self.latches)

    @cached_property
    def comb_outputs(self) -> tuple[str, ...]:
        return self.outputs + tuple(l.input for l in self.latches)

    @cached_property
    def driver(self) -> dict[str, Gate]:
        return {g.output: g for g in self.gates}

    @cached_property
    def nets(self) -> frozenset[str]:
        return frozenset(self.comb_inputs) | frozenset(self.driver)

    @cached_property
    def fanout(self) -> dict[str, list[str]]:
        fo: dict[str, list[str]] = {n: [] for n in self.nets}
        for g in self.gates:
            for f in g.fanin:
                fo[f].append(g.output)
        return fo

    @cached_property
    def topo(self) -> tuple[Gate, ...]:
        return tuple(topo_order(self))

    @cached_property
    def supports(self) -> dict[str, int]:
        """Absolute-input support of every net as a bitmask over comb_inputs."""
        sup = {name: 1 << i for i, name in enumerate(self.comb_inputs)}
        for g in self.topo:
            mask = 0
            for f in g.fanin:
                mask |= sup[f]
            sup[g.output] = mask
        return sup

    def replace(self, **changes) -> "Circuit":
        fields = dict(name=self.name, inputs=self.inputs, outputs=self.outputs,
                      gates=self.gates, latches=self.latches)
        fields.update(changes)
        return Circuit(**fields)


def validate(c: Circuit) -> None:
    lines = c._lines
    seen: set[str] = set()
    for name in c.comb_inputs:
        if not name:
            raise NetlistError("empty net name")
        if name in seen:
            raise NetlistError(f"duplicate definition of net {name!r}", lines.get(name))
        seen.add(name)
    for g in c.gates:
        if g.output in seen:
            raise NetlistError(f"duplicate definition of net {g.output!r}", lines.get(g.output))
        seen.add(g.output)
        if g.kind.unary and len(g.fanin) != 1:
            raise NetlistError(f"{g.kind.value} gate {g.output!r} needs exactly 1 input, "
                               f"got {len(g.fanin)}", lines.get(g.output))
        if not g.kind.unary and len(g.fanin) < 2:
            raise NetlistError(f"{g.kind.value} gate {g.output!r} needs at least 2 inputs, "
                               f"got {len(g.fanin)}", lines.get(g.output))
    # cycles are reported ahead of dangling references: "x = AND(x, y)" is a cycle
    _find_cycle(c)
    for g in c.gates:
        for f in g.fanin:
            if f not in seen:
                raise NetlistError(f"undefined net {f!r} used by {g.output!r}", lines.get(g.output))
    for l in c.latches:
        if l.input not in seen:
            raise NetlistError(f"undefined net {l.input!r} feeding latch {l.output!r}",
                               lines.get(l.output))
    for o in c.outputs:
        if o not in seen:
            raise NetlistError(f"undefined output net {o!r}", lines.get(("OUTPUT", o)))


def _find_cycle(c: Circuit) -> None:
    driver = {g.output: g for g in c.gates}
    state: dict[str, int] = {}  # 1 = on stack, 2 = done
    for root in driver:
        if state.get(root):
            continue
        stack = [(root, iter(driver[root].fanin))]
        state[root] = 1
        while stack:
            net, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[net] = 2
                stack.pop()
            elif nxt in driver:
                s = state.get(nxt)
                if s == 1:
                    raise NetlistError(f"combinational cycle through {nxt!r}",
                                       c._lines.get(nxt))
                if s is None:
                    state[nxt] = 1
                    stack.append((nxt, iter(driver[nxt].fanin)))


def topo_order(c: Circuit) -> list[Gate]:
    """Gates in dependency order, ties broken by declaration order."""
    index = {g.output: i for i, g in enumerate(c.gates)}
    pending = {}
    users: dict[str, list[int]] = {}
    for i, g in enumerate(c.gates):
        deps = {f for f in g.fanin if f in index}
        pending[i] = len(deps)
        for d in deps:
            users.setdefault(d, []).append(i)
    ready = [i for i, n in pending.items() if n == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        g = c.gates[i]
        order.append(g)
        for u in users.get(g.output, ()):
            pending[u] -= 1
            if pending[u] == 0:
                heapq.heappush(ready, u)
    if len(order) != len(c.gates):
        raise NetlistError("combinational cycle detected")
    return order


def absolute_inputs(c: Circuit, net: str) -> set[str]:
    """Primary and pseudo-primary inputs in the transitive fan-in of ``net``."""
    if net not in c.supports:
        raise KeyError(f"unknown net {net!r}")
    mask = c.supports[net]
    return {name for i, name in enumerate(c.comb_inputs) if mask >> i & 1}


def support_size(c: Circuit, net: str) -> int:
    return c.supports[net].bit_count()


def eligible_gates(c: Circuit, k: int, g: int) -> list[Gate]:
    """The first ``g`` gates (topological order) whose support has exactly ``k`` inputs."""
    if k < 1 or g < 1:
        raise ValueError("k and g must be >= 1")
    sup = c.supports
    hits = [gate for gate in c.topo if sup[gate.output].bit_count() == k]
    return hits[:g]


# --- .bench text format ---

_DECL = re.compile(r"^(INPUT|OUTPUT)\s*\(\s*([^()\s]+)\s*\)$", re.I)
_ASSIGN = re.compile(r"^([^=\s]+)\s*=\s*(\w+)\s*\((.*)\)$")


def parse_bench(text: str, name: str = "circuit") -> Circuit:
    inputs: list[str] = []
    outputs: list[str] = []
    gates: list[Gate] = []
    latches: list[Latch] = []
    lines: dict = {}
    defined: dict[str, int] = {}

    def define(net, lineno):
        if net in defined:
            raise NetlistError(f"duplicate definition of net {net!r} "
                               f"(first defined on line {defined[net]})", lineno)
        defined[net] = lineno
        lines[net] = lineno

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DECL.match(line)
        if m:
            word, net = m.group(1).upper(), m.group(2)
            if word == "INPUT":
                define(net, lineno)
                inputs.append(net)
            else:
                lines.setdefault(("OUTPUT", net), lineno)
                outputs.append(net)
            continue
        m = _ASSIGN.match(line)
        if not m:
            raise NetlistError(f"cannot parse {line!r}", lineno)
        out, word, args = m.group(1), m.group(2).upper(), m.group(3)
        fanin = tuple(a.strip() for a in args.split(",")) if args.strip() else ()
        if any(not a for a in fanin):
            raise NetlistError(f"empty operand in {line!r}", lineno)
        define(out, lineno)
        if word == "DFF":
            if len(fanin) != 1:
                raise NetlistError(f"DFF {out!r} needs exactly 1 input", lineno)
            latches.append(Latch(out, fanin[0]))
            continue
        kind = _KIND_ALIASES.get(word)
        if kind is None:
            try:
                kind = GateKind(word)
            except ValueError:
                raise NetlistError(f"unknown gate kind {m.group(2)!r}", lineno) from None
        gates.append(Gate(out, kind, fanin))
    return Circuit(name, tuple(inputs), tuple(outputs), tuple(gates), tuple(latches), lines)


def write_bench(c: Circuit) -> str:
    out = [f"# {c.name}"]
    out += [f"INPUT({i})" for i in c.inputs]
    out += [f"OUTPUT({o})" for o in c.outputs]
    out += [f"{l.output} = DFF({l.input})" for l in c.latches]
    out += [f"{g.output} = {g.kind.value}({', '.join(g.fanin)})" for g in c.gates]
    return "\n".join(out) + "\n"


def load_bench(path) -> Circuit:
    path = Path(path)
    return parse_bench(path.read_text(encoding="utf-8"), name=path.stem)


def save_bench(c: Circuit, path) -> None:
    Path(path).write_text(write_bench(c), encoding="utf-8", newline="\n")


def cell_counts(c: Circuit) -> dict[str, int]:
    counts: dict[str, int] = {}
    for g in c.gates:
        counts[g.kind.value] = counts.get(g.kind.value, 0) + 1
    if c.latches:
        counts["DFF"] = len(c.latches)
    return counts
