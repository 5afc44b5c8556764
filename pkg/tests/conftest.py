from pathlib import Path

import numpy as np
import pytest

from advlin.losses import Dataset

DATA_DIR = Path(__file__).parent / "data"
IRIS_PATH = DATA_DIR / "iris.data"


@pytest.fixture
def pair():
    """{((1,0),+1), ((-1,0),-1)}"""
    return Dataset(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([1.0, -1.0]))


@pytest.fixture
def iris_path():
    return str(IRIS_PATH)


def planted_dataset(rng, n, d, gamma):
    """n points in the unit ball with |<x, u>| >= gamma for a random unit u, labelled by sign(<x, u>)."""
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    X = []
    while len(X) < n:
        x = rng.standard_normal(d)
        x *= rng.uniform(0, 1) ** (1 / d) / np.linalg.norm(x)
        if abs(x @ u) >= gamma:
            X.append(x)
    X = np.array(X)
    return Dataset(X, np.sign(X @ u))


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
