import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgatelock.locking import (GateKeySpec, KeySchedule, LockConfig, LockError, NoEligibleGates,
                               ScheduleFormatError, build_row_keys, check_keys, lock_circuit,
                               lock_whole, locked_onset, parse_schedule, random_keys,
                               write_schedule)
from kgatelock.logic2lvl import TruthTable
from kgatelock.netlist import GENERATED_PREFIX, parse_bench, write_bench
from kgatelock.simeval import Budget, equiv_check

C17_KEYS = ("01", "11", "10", "11")


def test_row_keys_cyclic_and_static():
    assert build_row_keys(["011", "100", "101"], 4) == ["011", "100", "101", "011"]
    assert build_row_keys(["011", "100", "101"], 4, static=True) == ["011"] * 4
    assert build_row_keys(list(C17_KEYS), 4) == list(C17_KEYS)
    with pytest.raises(LockError):
        build_row_keys(["0", "1", "0", "1", "0"], 4)


def test_check_keys():
    assert check_keys(["101", "011"]) == 3
    for bad in ([], ["10", "1"], ["1x"]):
        with pytest.raises(LockError):
            check_keys(bad)


def test_random_keys_seeded():
    assert random_keys(5, 3, 7) == random_keys(5, 3, 7)
    assert all(len(k) == 5 for k in random_keys(5, 3, 7))


def test_locked_onset_nand():
    spec = GateKeySpec("G10", ("G1", "G3"), ("k0", "k1"), C17_KEYS)
    tt = TruthTable(("G1", "G3"), (1, 1, 1, 0))
    # key bits sit above the two variable bits
    assert locked_onset(spec, tt) == [0b0100, 0b1101, 0b1010]


def test_gate_key_spec_validation():
    with pytest.raises(ValueError):
        GateKeySpec("g", ("a",), ("k0",), ("0",))
    with pytest.raises(ValueError):
        GateKeySpec("g", ("a",), ("k0",), ("0", "11"))


def test_lock_c17_reference_configuration(c17):
    locked, sched, rep = lock_circuit(c17, LockConfig(k=2, g=3, keys=C17_KEYS))
    assert rep.locked_gates == ["G10", "G11"]
    assert sched.m == rep.key_input_count == 4
    assert locked.inputs == c17.inputs + ("keyinput0", "keyinput1", "keyinput2", "keyinput3")
    assert rep.onset_sizes == {"G10": 3, "G11": 3}
    assert rep.added_cell_count > 0
    for name in ("G16", "G19", "G22", "G23"):
        assert locked.driver[name] == c17.driver[name]
    assert all(g.output.startswith(GENERATED_PREFIX) or g.output in c17.driver
               for g in locked.gates)
    assert equiv_check(c17, locked, sched).equivalent


def test_static_lock_uses_one_key(c17):
    _, sched, _ = lock_circuit(c17, LockConfig(k=2, g=2, keys=("011", "100", "101"),
                                               static=True))
    assert all(set(s.row_keys) == {"011"} for s in sched.specs)


def test_no_eligible_gates(c17):
    with pytest.raises(NoEligibleGates):
        lock_circuit(c17, LockConfig(k=9, g=3, keys=("01",)))


def test_too_many_keys_for_rows(c17):
    with pytest.raises(LockError):
        lock_circuit(c17, LockConfig(k=2, g=1, keys=("0", "1", "0", "1", "1")))


def test_bad_config(c17):
    with pytest.raises(LockError):
        lock_circuit(c17, LockConfig(k=2, g=1, keys=("01",), mode="weird"))
    with pytest.raises(LockError):
        lock_circuit(c17, LockConfig(k=2, g=1))


def test_random_key_config(c17):
    cfg = LockConfig(k=2, g=2, key_bits=5, num_keys=3, seed=4)
    locked, sched, _ = lock_circuit(c17, cfg)
    assert sched.m == 10
    assert {k for s in sched.specs for k in s.row_keys} <= set(random_keys(5, 3, 4))
    assert equiv_check(c17, locked, sched).equivalent


def test_deeper_gates_use_absolute_inputs(c17):
    locked, sched, rep = lock_circuit(c17, LockConfig(k=3, g=2, keys=("011", "100", "101")))
    assert rep.locked_gates == ["G16", "G19"]
    assert sched.specs[0].vars == ("G2", "G3", "G6")
    assert len(sched.specs[0].row_keys) == 8
    assert equiv_check(c17, locked, sched).equivalent


def test_direct_mode(c17):
    locked, sched, _ = lock_circuit(c17, LockConfig(k=2, g=2, keys=C17_KEYS, mode="direct",
                                                    select="topological"))
    assert sched.specs[0].vars == c17.driver["G10"].fanin
    assert equiv_check(c17, locked, sched).equivalent


def test_topological_selection_can_be_static_in_effect(load):
    # the first eligible gates of c499 are 2-input ANDs: one onset row, one key
    c499 = load("c499")
    _, sched, rep = lock_circuit(c499, LockConfig(k=2, g=3, keys=("011", "100", "101"),
                                                  select="topological"))
    for spec in sched.specs:
        assert rep.onset_sizes[spec.gate] == 1
    _, sched2, rep2 = lock_circuit(c499, LockConfig(k=2, g=3, keys=("011", "100", "101")))
    assert rep2.skipped_gates
    assert all(rep2.onset_sizes[s.gate] >= 2 for s in sched2.specs)


def test_sequential_circuit_lock(load):
    s27 = load("s27")
    locked, sched, _ = lock_circuit(s27, LockConfig(k=2, g=2, keys=("01", "10")))
    assert locked.latches == s27.latches
    assert sched.inputs == s27.comb_inputs
    assert equiv_check(s27, locked, sched).equivalent


def test_name_collisions_avoided():
    c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(keyinput9)\nOUTPUT(y)\nOUTPUT(z)\n"
                    "kgl_y_0 = NOT(keyinput9)\ny = AND(a, b)\nz = OR(kgl_y_0, a)\n")
    locked, sched, _ = lock_circuit(c, LockConfig(k=2, g=1, keys=("01", "10")))
    assert len({g.output for g in locked.gates}) == len(locked.gates)
    assert equiv_check(c, locked, sched).equivalent
    clash = parse_bench("INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = AND(a, keyinput0)\n")
    with pytest.raises(LockError, match="collision"):
        lock_circuit(clash, LockConfig(k=2, g=1, keys=("01",)))


def test_lock_whole_c17(c17):
    locked, sched = lock_whole(c17, C17_KEYS)
    assert sched.m == 4  # one 2-bit key group per output
    assert equiv_check(c17, locked, sched, Budget(exhaustive=True)).tested == 32
    assert equiv_check(c17, locked, sched).equivalent


def test_lock_whole_rejects_wide_circuits(load):
    with pytest.raises(LockError):
        lock_whole(load("c432"), ("01",))


def test_lock_whole_passthrough_output():
    c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(a)\nOUTPUT(y)\ny = XOR(a, b)\n")
    locked, sched = lock_whole(c, ("0", "1"))
    assert equiv_check(c, locked, sched).equivalent


def test_schedule_roundtrip(c17):
    _, sched, _ = lock_circuit(c17, LockConfig(k=3, g=2, keys=("011", "100", "101")))
    assert parse_schedule(write_schedule(sched)) == sched


@pytest.mark.parametrize("text", [
    "",
    "kgate-schedule v2\n",
    "kgate-schedule v1\nrow 00 key 01\n",
    "kgate-schedule v1\ngate g width 1\n  keyinputs k\n  vars a\n  row 0 key 1\n",
    "kgate-schedule v1\ngate g width 2\n  keyinputs k\n  vars a\n  row 0 key 1\n  row 1 key 0\n",
    "kgate-schedule v1\ngate g\n",
    "kgate-schedule v1\nfrobnicate\n",
])
def test_schedule_parse_errors(text):
    with pytest.raises(ScheduleFormatError):
        parse_schedule(text)


def test_schedule_duplicate_key_names():
    a = GateKeySpec("g", ("a",), ("k",), ("0", "1"))
    with pytest.raises(ValueError):
        KeySchedule("c", ("a",), (a, a))


@settings(max_examples=25, deadline=None)
@given(k=st.integers(2, 4), g=st.integers(1, 3), width=st.integers(1, 4),
       t=st.integers(1, 4), seed=st.integers(0, 10_000), static=st.booleans())
def test_any_lock_is_equivalent_under_schedule(c17, k, g, width, t, seed, static):
    cfg = LockConfig(k=k, g=g, key_bits=width, num_keys=t, seed=seed, static=static)
    locked, sched, rep = lock_circuit(c17, cfg)
    assert rep.locked_gate_count == min(g, 2)
    assert sched.m == width * rep.locked_gate_count
    assert equiv_check(c17, locked, sched).equivalent
    assert parse_bench(write_bench(locked), locked.name) == locked
