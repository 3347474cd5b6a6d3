import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgatelock.attack import (AttackError, AttackStatus, CnfFormula, brute_force_multikey,
                              build_miter, encode_circuit, parse_dimacs, replay_dips,
                              sat_attack, sat_decide, split_inputs, tseitin, verify_key)
from kgatelock.locking import LockConfig, lock_circuit
from kgatelock.netlist import Circuit, Gate, GateKind, parse_bench
from kgatelock.simeval import Budget, InterfaceError, SimOracle, bits_of, key_for, simulate

DYNAMIC = ("011", "100", "101")


def check_encoding(c: Circuit, trials: int, seed: int = 0):
    f = tseitin(c)
    rng = random.Random(seed)
    n = len(c.comb_inputs)
    for _ in range(trials):
        x = [rng.getrandbits(1) for _ in range(n)]
        units = [f.varmap[i] if b else -f.varmap[i] for i, b in zip(c.comb_inputs, x)]
        res = sat_decide(f, units)
        assert res.sat
        got = tuple(int(res.model[f.varmap[o]]) for o in c.comb_outputs)
        assert got == simulate(c, x)


@pytest.mark.parametrize("name", ["c17", "s27"])
def test_encoding_soundness_small_benchmarks(load, name):
    check_encoding(load(name), 1000)


def test_encoding_soundness_locked(c17):
    locked, _, _ = lock_circuit(c17, LockConfig(k=2, g=2, keys=("01", "11", "10", "11")))
    check_encoding(locked, 1000, seed=1)


@st.composite
def small_circuits(draw):
    n = draw(st.integers(1, 5))
    nets = [f"i{j}" for j in range(n)]
    gates = []
    for j in range(draw(st.integers(1, 12))):
        kind = draw(st.sampled_from(list(GateKind)))
        arity = 1 if kind.unary else draw(st.integers(2, 4))
        gates.append(Gate(f"n{j}", kind, tuple(draw(st.sampled_from(nets))
                                                for _ in range(arity))))
        nets.append(f"n{j}")
    outs = tuple(dict.fromkeys(draw(st.lists(st.sampled_from(nets[n:]), min_size=1,
                                             max_size=3))))
    return Circuit("rand", tuple(nets[:n]), outs, tuple(gates))


@settings(max_examples=40, deadline=None)
@given(small_circuits(), st.integers(0, 1000))
def test_encoding_soundness_random(c, seed):
    check_encoding(c, 20, seed)


@settings(max_examples=40, deadline=None)
@given(small_circuits(), st.data())
def test_constant_folding_agrees_with_simulation(c, data):
    n = len(c.inputs)
    fixed = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
    f = CnfFormula()
    vals = encode_circuit(f, c, consts=dict(zip(c.inputs, map(int, fixed))))
    res = sat_decide(f)
    assert res.sat
    want = simulate(c, [int(b) for b in fixed])
    for o, w in zip(c.outputs, want):
        v = vals[o]
        got = v if isinstance(v, bool) else (res.model[abs(v)] == (v > 0))
        assert int(got) == w


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8).flatmap(lambda v: st.lists(
    st.lists(st.integers(1, v).flatmap(lambda x: st.sampled_from([x, -x])),
             min_size=1, max_size=3), max_size=25).map(lambda cl: (v, cl))))
def test_cdcl_and_dpll_agree(case):
    v, clauses = case
    f = CnfFormula(v, clauses)
    a, b = sat_decide(f), sat_decide(f, engine="dpll")
    assert a.sat == b.sat
    for res in (a, b):
        if res.sat:
            assert all(any(res.model[abs(l)] == (l > 0) for l in cl) for cl in clauses)


def test_dimacs_roundtrip(c17):
    f = tseitin(c17)
    g = parse_dimacs("c comment\n" + f.to_dimacs())
    assert g.nvars == f.nvars and g.clauses == f.clauses
    assert f.to_dimacs().startswith(f"p cnf {f.nvars} {len(f.clauses)}\n")


def test_unsat_and_unknown_engine():
    assert not sat_decide(CnfFormula(1, [[1], [-1]])).sat
    assert not sat_decide(CnfFormula(1, [[]])).sat
    with pytest.raises(ValueError):
        sat_decide(CnfFormula(), engine="magic")


def lock(c, keys, static=False, g=2, select="dynamic-first"):
    return lock_circuit(c, LockConfig(k=2, g=g, keys=keys, static=static, select=select))


def test_static_c17_key_recovered(c17):
    locked, _, _ = lock(c17, ("101",), static=True)
    oracle = SimOracle(c17)
    res = sat_attack(locked, oracle)
    assert res.status is AttackStatus.KEY_CANDIDATE
    assert res.key_bits == "101101"
    assert verify_key(locked, res.key, oracle) == (True, 0.0)
    assert replay_dips(locked, res)


@pytest.mark.parametrize("seed", range(5))
def test_dynamic_c17_never_verified(c17, seed):
    locked, _, _ = lock(c17, DYNAMIC)
    oracle = SimOracle(c17)
    res = sat_attack(locked, oracle, seed=seed)
    assert res.status in (AttackStatus.KEY_CANDIDATE, AttackStatus.NO_KEY_EXISTS)
    if res.key is not None:
        ok, rate = verify_key(locked, res.key, oracle)
        assert not ok and rate > 0
    assert replay_dips(locked, res)


def test_dips_logged_with_oracle_answers(c17):
    locked, _, _ = lock(c17, DYNAMIC)
    res = sat_attack(locked, SimOracle(c17))
    for d, o in res.dips:
        assert o == simulate(c17, d)


def test_topological_selection_on_c499_is_breakable(load):
    # first-eligible gates carry a single onset key, so the lock is static in effect
    c499 = load("c499")
    locked, _, _ = lock(c499, DYNAMIC, g=3, select="topological")
    oracle = SimOracle(c499)
    res = sat_attack(locked, oracle, timeout=60)
    assert res.status is AttackStatus.KEY_CANDIDATE
    assert verify_key(locked, res.key, oracle)[0]


def test_iteration_limit_and_timeout(c17):
    locked, _, _ = lock(c17, DYNAMIC)
    res = sat_attack(locked, SimOracle(c17), max_iter=0)
    assert res.status is AttackStatus.ITERATION_LIMIT
    res = sat_attack(locked, SimOracle(c17), timeout=0)
    assert res.status is AttackStatus.TIMEOUT


def test_attack_input_errors(c17):
    with pytest.raises(AttackError):
        sat_attack(c17, SimOracle(c17))
    res = sat_attack(c17, SimOracle(c17), tolerant=True)
    assert res.status is AttackStatus.KEY_CANDIDATE and res.key == ()
    locked, _, _ = lock(c17, DYNAMIC)
    other = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n")
    with pytest.raises(InterfaceError):
        sat_attack(locked, SimOracle(other))
    with pytest.raises(InterfaceError):
        split_inputs(locked, ["nope"])


def test_verify_key_on_unlocked_circuit(c17):
    assert verify_key(c17, (), SimOracle(c17)) == (True, 0.0)
    with pytest.raises(InterfaceError):
        verify_key(c17, (), lambda x: x)


def test_verify_key_formal_step_catches_rare_difference():
    # differs from the reference only when all 24 inputs are 1
    n = 24
    names = [f"x{i}" for i in range(n)]
    ref = parse_bench("".join(f"INPUT({x})\n" for x in names) + "OUTPUT(y)\ny = BUF(x0)\n")
    text = ("".join(f"INPUT({x})\n" for x in names) + "INPUT(keyinput0)\nOUTPUT(y)\n"
            f"a = AND({', '.join(names)})\nb = AND(a, keyinput0)\ny = XOR(x0, b)\n")
    locked = parse_bench(text)
    oracle = SimOracle(ref)
    assert verify_key(locked, (0,), oracle, Budget(samples=200))[0]
    assert not verify_key(locked, (1,), oracle, Budget(samples=200))[0]
    assert verify_key(locked, (1,), oracle, Budget(samples=200), formal=False)[0]


def test_miter_formula_shape(c17):
    locked, _, _ = lock(c17, DYNAMIC)
    data, keys = split_inputs(locked)
    f, xv, ka, kb = build_miter(locked, data, keys)
    assert len(xv) == 5 and len(ka) == len(kb) == 6
    assert sat_decide(f).sat


def test_brute_force_contains_planted_schedule(c17):
    locked, sched, _ = lock(c17, ("01", "11", "10", "11"))
    rec = brute_force_multikey(locked, SimOracle(c17))
    assert len(rec.sets) == 32
    for i in range(32):
        x = bits_of(i, 5)
        assert rec.contains(x, key_for(sched, x))
    assert "1111" in rec.keys_for(bits_of(0b00110, 5))
    assert rec.to_text().startswith("kgate-recovery v1\n")


def test_brute_force_static_key_is_common(c17):
    locked, _, _ = lock(c17, ("101",), static=True)
    rec = brute_force_multikey(locked, SimOracle(c17))
    assert "101101" in rec.common_keys()


def test_brute_force_guard(load):
    c = load("c432")
    locked, _, _ = lock(c, DYNAMIC, g=1)
    with pytest.raises(AttackError, match="guard"):
        brute_force_multikey(locked, SimOracle(c))


# c6288 (a 16x16 multiplier) is left out: its miter does not resolve within minutes
LARGER = ["c2670", "c3540", "c5315", "c7552", "s27"]


@pytest.mark.slow
@pytest.mark.parametrize("name", LARGER)
def test_static_locks_are_broken_on_larger_benchmarks(load, name):
    c = load(name)
    locked, _, _ = lock(c, ("101",), static=True, g=3)
    oracle = SimOracle(c)
    res = sat_attack(locked, oracle, timeout=120)
    assert res.status is AttackStatus.KEY_CANDIDATE
    assert verify_key(locked, res.key, oracle)[0]


@pytest.mark.slow
@pytest.mark.parametrize("name", LARGER)
def test_dynamic_locks_hold_on_larger_benchmarks(load, name):
    c = load(name)
    locked, _, _ = lock(c, DYNAMIC, g=3)
    oracle = SimOracle(c)
    res = sat_attack(locked, oracle, timeout=120)
    assert res.status in (AttackStatus.KEY_CANDIDATE, AttackStatus.NO_KEY_EXISTS)
    if res.key is not None:
        assert not verify_key(locked, res.key, oracle)[0]
