import itertools

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graphs, random_graph, to_nx
from wlmargin.generators import basic, union_all
from wlmargin.graph import Graph, SizeCapError, disjoint_union, embeddings, is_isomorphic_small


def test_rejects_bad_edges():
    with pytest.raises(ValueError):
        Graph(3, ((0, 0),))
    with pytest.raises(ValueError):
        Graph(3, ((0, 3),))
    with pytest.raises(ValueError):
        Graph(3, ((0, 1), (1, 0)))
    with pytest.raises(ValueError):
        Graph(2, (), (1,))


def test_from_edges_merges_duplicates():
    g = Graph.from_edges(3, [(0, 1), (1, 0), (2, 1)])
    assert g.edges == ((0, 1), (1, 2))


def test_union_of_two_triangles():
    g = disjoint_union(basic("cycle", 3), basic("cycle", 3))
    assert (g.n, g.num_edges, len(g.connected_components())) == (6, 6, 2)


def test_union_identity():
    g = basic("path", 4)
    assert disjoint_union(Graph(0), g) == g


def test_union_of_three_cycles():
    g = union_all([basic("cycle", 6), basic("cycle", 3), basic("cycle", 3)])
    assert g.n == 12 and g.num_edges == 12
    assert set(g.degrees) == {2}


def test_isomorphism_examples():
    c6 = basic("cycle", 6)
    assert not is_isomorphic_small(c6, disjoint_union(basic("cycle", 3), basic("cycle", 3)))
    assert not is_isomorphic_small(basic("path", 3), basic("complete", 3))
    c4 = basic("cycle", 4)
    for perm in itertools.permutations(range(4)):
        assert is_isomorphic_small(c4, c4.relabeled(perm))


def test_isomorphism_cap():
    with pytest.raises(SizeCapError):
        is_isomorphic_small(basic("cycle", 11), basic("cycle", 11))


def test_unlabeled_equals_zero_labeled():
    g = basic("path", 3)
    assert g == g.with_labels([0, 0, 0])
    assert hash(g) == hash(g.with_labels([0, 0, 0]))
    assert g != g.with_labels([0, 1, 0])


def test_adjacency_matrix_and_induced():
    g = basic("cycle", 5)
    a = g.adjacency_matrix()
    assert (a == a.T).all() and a.sum() == 10
    h = g.induced([0, 1, 2])
    assert h.edges == ((0, 1), (1, 2))


@given(graphs())
def test_adjacency_symmetric_and_degrees(g):
    for v in range(g.n):
        assert g.degrees[v] == len(g.neighbors[v])
        for u in g.neighbors[v]:
            assert v in g.neighbors[u]
    assert sum(g.degrees) == 2 * g.num_edges


@given(graphs(max_n=4), graphs(max_n=3), graphs(max_n=3))
def test_union_associative(a, b, c):
    left = disjoint_union(disjoint_union(a, b), c)
    right = disjoint_union(a, disjoint_union(b, c))
    assert is_isomorphic_small(left, right)


@given(graphs(max_n=7), graphs(max_n=7))
def test_isomorphism_matches_networkx(g, h):
    assert is_isomorphic_small(g, h) == nx.is_isomorphic(to_nx(g), to_nx(h))


@given(graphs(max_n=8), st.randoms(use_true_random=False))
def test_isomorphic_to_permutation(g, r):
    perm = list(range(g.n))
    r.shuffle(perm)
    assert is_isomorphic_small(g, g.relabeled(perm))


def test_embedding_counts_match_networkx(rng):
    pattern = basic("path", 3)
    for _ in range(20):
        g = random_graph(rng, 7)
        ours = sum(1 for _ in embeddings(pattern, g, induced=True))
        gm = nx.algorithms.isomorphism.GraphMatcher(to_nx(g), to_nx(pattern))
        assert ours == sum(1 for _ in gm.subgraph_isomorphisms_iter())


def test_components():
    g = union_all([basic("path", 2), basic("empty", 2), basic("cycle", 3)])
    assert sorted(len(c) for c in g.connected_components()) == [1, 1, 2, 3]
    assert not g.is_connected()
    assert basic("cycle", 4).is_connected()
