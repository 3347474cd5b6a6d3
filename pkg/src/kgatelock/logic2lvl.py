"""Truth tables of logic cones, Quine-McCluskey minimization, SOP synthesis.

Cubes are strings over ``'0'``, ``'1'`` and ``'-'``, one character per
variable in the cover's variable order: ``"1-0"`` is ``a & ~c`` over
``(a, b, c)``. The all-dash cube is the universal cube.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .netlist import Circuit, Gate, GateKind

MAX_CONE_VARS = 20


@dataclass(frozen=True)
class TruthTable:
    vars: tuple[str, ...]
    bits: tuple[int, ...]  # index = assignment, vars[0] is the most significant bit

    def __post_init__(self):
        if len(self.vars) < 1:
            raise ValueError("truth table needs at least one variable")
        if len(self.bits) != 1 << len(self.vars):
            raise ValueError(f"expected {1 << len(self.vars)} bits, got {len(self.bits)}")

    @property
    def onset(self) -> list[int]:
        return [i for i, b in enumerate(self.bits) if b]

    def __str__(self):
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class Cover:
    vars: tuple[str, ...]
    cubes: tuple[str, ...]

    def __str__(self):
        if not self.cubes:
            return "0"
        return " | ".join(cube_str(c, self.vars) for c in self.cubes)


def cube_str(cube: str, names: Sequence[str]) -> str:
    lits = [("~" if ch == "0" else "") + n for ch, n in zip(cube, names) if ch != "-"]
    return " & ".join(lits) if lits else "1"


def var_patterns(v: int) -> list[int]:
    """Bit-parallel value of each variable over all 2**v assignments."""
    pats = []
    for j in range(v):
        shift = v - 1 - j
        pats.append(sum(1 << i for i in range(1 << v) if i >> shift & 1))
    return pats


def cone_gates(c: Circuit, net: str) -> list[Gate]:
    """Gates in the transitive fan-in of ``net``, topologically ordered."""
    cone = set()
    stack = [net]
    while stack:
        n = stack.pop()
        g = c.driver.get(n)
        if g is None or n in cone:
            continue
        cone.add(n)
        stack.extend(g.fanin)
    return [g for g in c.topo if g.output in cone]


def cone_table(c: Circuit, net: str, vars: Sequence[str]) -> TruthTable:
    vars = tuple(vars)
    if len(vars) > MAX_CONE_VARS:
        raise ValueError(f"cone_table limited to {MAX_CONE_VARS} variables, got {len(vars)}")
    if net not in c.nets:
        raise KeyError(f"unknown net {net!r}")
    mask = c.supports[net]
    support = {n for i, n in enumerate(c.comb_inputs) if mask >> i & 1}
    missing = support - set(vars)
    if missing:
        raise ValueError(f"vars must cover the support of {net!r}; missing {sorted(missing)}")
    width = 1 << len(vars)
    ones = (1 << width) - 1
    values = dict(zip(vars, var_patterns(len(vars))))
    for g in cone_gates(c, net):
        if g.output in values:  # an internal net used as a variable
            continue
        values[g.output] = g.kind.eval([values.get(f, 0) for f in g.fanin], ones)
    pat = values.get(net, 0)
    return TruthTable(vars, tuple(pat >> i & 1 for i in range(width)))


# --- Quine-McCluskey ---

def _to_cube(value: int, dash: int, v: int) -> str:
    out = []
    for j in range(v):
        bit = 1 << (v - 1 - j)
        out.append("-" if dash & bit else ("1" if value & bit else "0"))
    return "".join(out)


def _cube_minterms(cube: str) -> list[int]:
    terms = [0]
    for ch in cube:
        if ch == "-":
            terms = [t << 1 for t in terms] + [t << 1 | 1 for t in terms]
        else:
            terms = [t << 1 | int(ch) for t in terms]
    return terms


def prime_implicants(onset: Iterable[int], v: int) -> list[str]:
    current = {(m, 0) for m in onset}
    primes = set()
    while current:
        merged = set()
        used = set()
        for value, dash in current:
            for j in range(v):
                bit = 1 << j
                if dash & bit or value & bit:
                    continue
                other = (value | bit, dash)
                if other in current:
                    merged.add((value, dash | bit))
                    used.add((value, dash))
                    used.add(other)
        primes |= current - used
        current = merged
    return sorted(_to_cube(val, dash, v) for val, dash in primes)


def qm_minimize(onset: Iterable[int], vars: Sequence[str]) -> Cover:
    """Exact SOP cover of ``onset``: primes, essentials, then greedy selection.

    Off-onset rows are hard zeros. The result is irredundant but not
    necessarily minimum.
    """
    vars = tuple(vars)
    v = len(vars)
    onset = sorted(set(onset))
    if any(m < 0 or m >= 1 << v for m in onset):
        raise ValueError("onset index out of range")
    if not onset:
        return Cover(vars, ())
    if len(onset) == 1 << v:
        return Cover(vars, ("-" * v,))
    primes = prime_implicants(onset, v)
    covers = [set(_cube_minterms(p)) for p in primes]
    by_term: dict[int, list[int]] = {m: [] for m in onset}
    for idx, terms in enumerate(covers):
        for m in terms:
            by_term[m].append(idx)

    chosen = sorted({idxs[0] for idxs in by_term.values() if len(idxs) == 1})
    uncovered = set(onset)
    for idx in chosen:
        uncovered -= covers[idx]
    while uncovered:
        best = max(range(len(primes)), key=lambda i: (len(covers[i] & uncovered), -i))
        chosen.append(best)
        uncovered -= covers[best]

    # greedy picks can leave earlier picks redundant; drop them, latest first
    for idx in reversed(list(chosen)):
        rest = set()
        for j in chosen:
            if j != idx:
                rest |= covers[j]
        if covers[idx] <= rest:
            chosen.remove(idx)
    return Cover(vars, tuple(primes[i] for i in sorted(chosen)))


def eval_cover(cov: Cover, assignment: Sequence[int]) -> int:
    if len(assignment) != len(cov.vars):
        raise ValueError(f"assignment has {len(assignment)} bits, cover has {len(cov.vars)} vars")
    for cube in cov.cubes:
        if all(ch == "-" or int(ch) == bool(a) for ch, a in zip(cube, assignment)):
            return 1
    return 0


def cover_table(cov: Cover) -> TruthTable:
    v = len(cov.vars)
    bits = [0] * (1 << v)
    for cube in cov.cubes:
        for m in _cube_minterms(cube):
            bits[m] = 1
    return TruthTable(cov.vars, tuple(bits))


def cover_to_gates(cov: Cover, out: str, fresh: Callable[[], str]) -> list[Gate]:
    """Synthesize ``cov`` as a NOT/AND/OR network driving ``out``.

    Bench has no constant literals, so constants are built from the first
    variable: ``AND(x, ~x)`` for 0 and ``OR(x, ~x)`` for 1.
    """
    if not cov.vars:
        raise ValueError("cannot synthesize a cover over zero variables")
    x = cov.vars[0]
    universal = any(set(c) == {"-"} for c in cov.cubes)
    if not cov.cubes or universal:
        nx = fresh()
        kind = GateKind.OR if universal else GateKind.AND
        return [Gate(nx, GateKind.NOT, (x,)), Gate(out, kind, (x, nx))]

    if len(cov.cubes) == 1:
        lits = [(n, ch) for n, ch in zip(cov.vars, cov.cubes[0]) if ch != "-"]
        if len(lits) == 1:
            n, ch = lits[0]
            return [Gate(out, GateKind.BUF if ch == "1" else GateKind.NOT, (n,))]

    gates: list[Gate] = []
    negated: dict[str, str] = {}
    for n, col in zip(cov.vars, zip(*cov.cubes)):
        if "0" in col:
            negated[n] = fresh()
            gates.append(Gate(negated[n], GateKind.NOT, (n,)))

    terms = []
    single = len(cov.cubes) == 1
    for cube in cov.cubes:
        lits = [n if ch == "1" else negated[n] for n, ch in zip(cov.vars, cube) if ch != "-"]
        if len(lits) == 1:
            terms.append(lits[0])
        else:
            net = out if single else fresh()
            gates.append(Gate(net, GateKind.AND, tuple(lits)))
            terms.append(net)
    if not single:
        gates.append(Gate(out, GateKind.OR, tuple(terms)))
    return gates
