import itertools
import random

import pytest
from hypothesis import strategies as st

from esep.graph import Dag


def random_dag(rng: random.Random, n_max=8, p_edge=0.35, p_latent=0.25) -> Dag:
    n = rng.randint(2, n_max)
    names = [f"V{i}" for i in range(n)]
    order = names[:]
    rng.shuffle(order)
    edges = [(order[i], order[j]) for i, j in itertools.combinations(range(n), 2) if rng.random() < p_edge]
    latent = [v for v in names if rng.random() < p_latent]
    if len(latent) > n - 2:
        latent = latent[: n - 2]
    return Dag.from_edges(edges, latent=latent, nodes=names)


@st.composite
def dags(draw, n_max=7):
    n = draw(st.integers(2, n_max))
    names = [f"V{i}" for i in range(n)]
    pairs = list(itertools.combinations(range(n), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    perm = draw(st.permutations(names))
    edges = [(perm[i], perm[j]) for (i, j), k in zip(pairs, keep) if k]
    return Dag.from_edges(edges, nodes=names)


@pytest.fixture
def rng():
    return random.Random(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
