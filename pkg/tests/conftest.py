import numpy as np
import pytest
from hypothesis import strategies as st

from statreg.measures import Alphabet, make_measure


@pytest.fixture
def ab():
    return Alphabet(("a", "b"))


@pytest.fixture
def abc():
    return Alphabet(("a", "b", "c"))


def probability_vectors(min_size=2, max_size=5):
    """Hypothesis strategy for strictly positive-sum weight vectors."""
    return st.integers(min_size, max_size).flatmap(
        lambda k: st.lists(st.floats(0, 1, allow_nan=False), min_size=k, max_size=k)
        .filter(lambda w: sum(w) > 1e-3))


def measure_of(weights):
    alphabet = Alphabet(tuple(f"x{i}" for i in range(len(weights))))
    return make_measure(alphabet, weights)


def random_simplex(rng, k, n):
    return rng.dirichlet(np.ones(k), size=n)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
