import itertools
from math import comb

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import to_nx
from wlmargin.generators import (
    basic, circulant, construction, er_dataset, er_graph, graph_rng, regular_single_orbit,
)
from wlmargin.graph import is_isomorphic_small
from wlmargin.kernels import wl_feature
from wlmargin.refinement import refine_wl
from wlmargin.subgraphs import contains_induced_at, cycle, clique, count_subgraphs


def test_basic_shapes():
    c6 = basic("cycle", 6)
    assert (c6.n, c6.num_edges, set(c6.degrees)) == (6, 6, {2})
    assert basic("complete", 4).num_edges == 6
    assert basic("path", 3).degrees == (1, 2, 1)
    with pytest.raises(ValueError):
        basic("star", 3)


def _has_triangle(g):
    return any(contains_induced_at(g, v, cycle(3)) for v in range(g.n))


def test_circulants():
    a, b = circulant(8, {1, 2}), circulant(8, {1, 3})
    assert set(a.degrees) == set(b.degrees) == {4}
    assert _has_triangle(a) and not _has_triangle(b)
    assert circulant(6, {1}) == basic("cycle", 6)


def test_regular_single_orbit_examples():
    assert regular_single_orbit(8, 0).num_edges == 0
    g = regular_single_orbit(8, 3)
    assert g.degrees == (3,) * 8
    assert is_isomorphic_small(regular_single_orbit(6, 5), basic("complete", 6))


@given(st.integers(2, 12).map(lambda k: 2 * k), st.data())
def test_regular_single_orbit_properties(n, data):
    i = data.draw(st.integers(0, n - 1))
    g = regular_single_orbit(n, i)
    assert g.degrees == (i,) * n
    rot = g.relabeled([(v + 1) % n for v in range(n)])
    assert rot.edges == g.edges


def test_regular_blocks_orthogonal():
    n, m = 10, 5
    gs = [regular_single_orbit(n, i) for i in range(m)]
    tr = refine_wl(gs, 1)
    blocks = [{k: v for k, v in wl_feature(tr, j, 1).entries.items() if k[0] == 1} for j in range(m)]
    for a, b in itertools.combinations(blocks, 2):
        assert not set(a) & set(b)


def test_separator_pair():
    (g, h), f, y = construction("separator_pair", 6)
    assert g == basic("cycle", 6)
    assert h.num_edges == 6 and len(h.connected_components()) == 2
    assert f == cycle(3) and y == [1, 0]
    for n in (6, 7, 16, 33):
        (g, h), _, _ = construction("separator-pair", n)
        assert g.n == h.n == n
        assert set(g.degrees) == set(h.degrees) == {2}


def test_separability_set_blocks():
    n = 16
    graphs, f, targets = construction("separability", n, m=4)
    assert len(graphs) == 4 and targets == [0, 1, 0, 1]
    assert f == cycle(n - 4)
    tr = refine_wl(graphs, 3)
    entries = wl_feature(tr, 0, 3).entries
    # uniform start: one color at t=0, then cycle vertices and the isolated vertex split
    assert [v for k, v in entries.items() if k[0] == 0] == [n - 3]
    for t in range(1, 4):
        assert sorted((v for k, v in entries.items() if k[0] == t), reverse=True) == [n - 4, 1]
    assert all(g.n <= n for g in graphs)


def test_separability_set_extends():
    graphs, _, targets = construction("separability_set", 20, m=7)
    assert len(graphs) == 7
    assert targets == [0, 1, 0, 1, 0, 1, 0]


def test_shrink_pair():
    (g, h), f, y = construction("shrink", 10)
    assert g.n == h.n == 20
    assert g.num_edges == comb(10, 2)
    assert h.num_edges == 3 + 7
    assert f == cycle(3)


def test_unknown_construction():
    with pytest.raises(ValueError):
        construction("nope", 10)


def test_er_examples():
    ds = er_dataset(10, 5, 0.0, cycle(3), seed=1)
    assert set(ds.targets) == {0}
    ds = er_dataset(10, 4, 1.0, cycle(3), seed=1)
    assert set(ds.targets) == {4}
    assert ds.provenance["count_mode"] == "induced"


def test_er_reproducible_per_index():
    a = er_dataset(20, 12, 0.3, clique(4), seed=7)
    b = er_dataset(20, 12, 0.3, clique(4), seed=7)
    assert a.graphs == b.graphs and a.targets == b.targets
    # stream of graph i does not depend on how many graphs were drawn
    assert er_graph(12, 0.3, graph_rng(7, 5)) == a.graphs[5]
    c = er_dataset(20, 12, 0.3, clique(4), seed=8)
    assert c.graphs != a.graphs


def test_er_edge_density():
    g = [er_graph(30, 0.2, graph_rng(3, i)) for i in range(50)]
    dens = np.mean([x.num_edges for x in g]) / comb(30, 2)
    assert abs(dens - 0.2) < 0.02


def test_er_counts_match_networkx():
    ds = er_dataset(15, 9, 0.5, cycle(4), seed=2)
    for g, y in zip(ds.graphs, ds.targets):
        gm = nx.algorithms.isomorphism.GraphMatcher(to_nx(g), to_nx(cycle(4)))
        induced = {frozenset(m) for m in gm.subgraph_isomorphisms_iter()}
        assert y == len(induced)
    partial = er_dataset(15, 9, 0.5, cycle(4), seed=2, induced=False)
    assert all(p >= i for p, i in zip(partial.targets, ds.targets))
    assert count_subgraphs(basic("complete", 4), cycle(4), induced=False) == 3


def test_er_pattern_order_limit():
    with pytest.raises(ValueError):
        er_dataset(2, 10, 0.5, cycle(7), seed=0)
