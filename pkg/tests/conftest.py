import pytest

from tgrsim.config import SimConfig
from tgrsim.radio import McsTable
from tgrsim.rng import RngFactory
from tgrsim.scheduler import TddPattern


@pytest.fixture(scope="session")
def table():
    return McsTable.from_csv()


@pytest.fixture
def tdd():
    return TddPattern("DDDSU", 10)


@pytest.fixture
def rngs():
    return RngFactory(1234, 0)


def small_config(**kw) -> SimConfig:
    base = {"num_cells": 1, "ues_per_cell": 2, "warmup_s": 0.05, "measure_s": 0.2, "drops": 1}
    base.update(kw)
    return SimConfig.from_dict(base)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
