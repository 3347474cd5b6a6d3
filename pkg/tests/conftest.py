from pathlib import Path

import pytest

from kgatelock.netlist import load_bench

ROOT = Path(__file__).resolve().parents[1]
BENCH = ROOT / "benchmarks"
ISCAS85 = ["c17", "c432", "c499", "c880", "c1355", "c1908", "c2670", "c3540", "c5315",
           "c6288", "c7552"]
ATTACK_SET = ["c17", "c432", "c499", "c880", "c1355", "c1908"]

# acceptance verdicts, echoed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def bench_path(name: str) -> Path:
    return BENCH / f"{name}.bench"


@pytest.fixture(scope="session")
def load():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_bench(bench_path(name))
        return cache[name]
    return get


@pytest.fixture(scope="session")
def c17(load):
    return load("c17")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
