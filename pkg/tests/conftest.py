import numpy as np
import pytest

from fqshtuka import algebra as alg
from fqshtuka import field as fl
from fqshtuka.expr import evaluate_element


@pytest.fixture
def F2():
    return fl.field_for(2)


@pytest.fixture
def F4():
    return fl.field_for(4)


@pytest.fixture
def Reps(F2):
    """F_2[e]/(e^2) with zeta = e."""
    return alg.truncated_polynomial(F2, 2, "e", zeta="e")


@pytest.fixture
def Reps0(F2):
    """F_2[e]/(e^2) with zeta = 0."""
    return alg.truncated_polynomial(F2, 2, "e")


def elem(A, text):
    return evaluate_element(text, A)


def mat(A, rows):
    """Matrix over A from rows of element expressions."""
    return np.array([[evaluate_element(x, A) for x in row] for row in rows], dtype=np.int64)


def pytest_terminal_summary(terminalreporter, config):
    from test_acceptance import ACCEPTANCE_LINES
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
