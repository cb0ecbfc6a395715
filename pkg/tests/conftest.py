import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from wlmargin.graph import Graph

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=0, max_n=9, labeled=False):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    labels = None
    if labeled:
        labels = draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    return Graph(n, tuple(p for p, keep in zip(pairs, mask) if keep), labels)


def random_graph(rng: np.random.Generator, n: int, p: float = 0.4) -> Graph:
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return Graph(n, tuple(zip(iu[0][keep].tolist(), iu[1][keep].tolist())))


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
