import numpy as np
import pytest

from qdiscord.states import random_density

TWO_QUBITS = (("A", 2), ("B", 2))

ACCEPTANCE_LINES = []


def two_qubit_state(seed, rank=4):
    return random_density(4, rank, seed, layout=TWO_QUBITS)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
