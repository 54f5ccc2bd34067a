import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from coarse_causal.graph import Dag


@st.composite
def dags(draw, min_d=1, max_d=6):
    """Random DAG: edges drawn forward along a random permutation."""
    d = draw(st.integers(min_d, max_d))
    order = draw(st.permutations(range(1, d + 1)))
    pairs = list(itertools.combinations(range(d), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Dag(d, [(order[i], order[j]) for (i, j), k in zip(pairs, keep) if k])


def random_dag(rng, d, p=0.4):
    order = rng.permutation(d) + 1
    return Dag(d, [(int(order[i]), int(order[j])) for i, j in itertools.combinations(range(d), 2)
                   if rng.random() < p])


@pytest.fixture
def path4():
    return Dag(4, [(1, 2), (2, 3), (3, 4)])


@pytest.fixture
def ex_ivn():
    # 1 -> 3 <- 2, 3 -> 4
    return Dag(4, [(1, 3), (2, 3), (3, 4)])


@pytest.fixture
def ex_ess():
    # 1 -> 2 -> 3 <- 4, 3 -> 5
    return Dag(5, [(1, 2), (2, 3), (4, 3), (3, 5)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by test_acceptance.py, echoed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])
