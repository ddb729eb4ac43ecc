import random
from fractions import Fraction

import pytest
from oracles import load

from taxman.core import game_from_edges

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def two_vertex():
    return load("two_vertex.json")


@pytest.fixture
def chain3():
    return load("chain3.json")


@pytest.fixture
def chain4():
    return load("chain4.json")


@pytest.fixture
def cycle4():
    return load("cycle4_target.json")


@pytest.fixture
def singleton():
    return game_from_edges({"s": Fraction(7, 3)}, [("s", "s")])


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
