from pathlib import Path

import pytest

from desdiag.automata import ModularSystem, Module
from desdiag.fsm_io import load_fsm

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def g1():
    return load_fsm(FIXTURES / "g1.fsm")


@pytest.fixture(scope="session")
def g2():
    return load_fsm(FIXTURES / "g2.fsm")


@pytest.fixture(scope="session")
def example_system(g1, g2):
    return ModularSystem((Module("g1", g1), Module("g2", g2)))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
