import numpy as np
import pytest

from l1homotopy.core import ProblemInstance

_ACCEPTANCE_LINES = []


def record_criterion(label, passed, detail=""):
    _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")


@pytest.fixture
def record():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_problem(m, n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b = scale * rng.standard_normal(m)
    return ProblemInstance.from_arrays(A, b)


@pytest.fixture
def small_problem():
    return random_problem(8, 12, seed=3)
