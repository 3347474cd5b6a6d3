"""K-Gate Lock: logic locking with input-dependent keys, plus the tooling
to parse, lock, verify and attack ISCAS ``.bench`` netlists."""
from .netlist import (Circuit, Gate, GateKind, Latch, NetlistError, absolute_inputs,
                      eligible_gates, load_bench, parse_bench, save_bench, write_bench)
from .logic2lvl import Cover, TruthTable, cone_table, eval_cover, qm_minimize
from .locking import (GateKeySpec, KeySchedule, LockConfig, LockError, LockReport,
                      NoEligibleGates, lock_circuit, lock_whole, parse_schedule, write_schedule)
from .simeval import (Budget, SimOracle, corruption_rate, equiv_check, key_for, scheduled_sim,
                      simulate)
from .attack import (AttackResult, AttackStatus, brute_force_multikey, sat_attack, tseitin,
                     verify_key)

__version__ = "0.1.0"
