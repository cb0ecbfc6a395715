"""Fixed graph constructions and random datasets.

Random graphs draw from numpy's PCG64 with one independent stream per graph
index (``SeedSequence([seed, index])``), so any single graph can be rebuilt
without generating the ones before it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graph import Graph, disjoint_union
from .subgraphs import count_subgraphs, cycle as _cycle, clique as _clique

__all__ = [
    "LabeledDataset",
    "basic",
    "union_all",
    "circulant",
    "regular_single_orbit",
    "construction",
    "CONSTRUCTIONS",
    "er_graph",
    "er_dataset",
    "graph_rng",
]


@dataclass(frozen=True)
class LabeledDataset:
    graphs: tuple[Graph, ...]
    targets: tuple[int, ...]
    seed: int | None = None
    provenance: dict = field(default_factory=dict)
    patterns: tuple[Graph, ...] = ()

    def __post_init__(self):
        if len(self.graphs) != len(self.targets):
            raise ValueError("graphs and targets differ in length")

    def __len__(self):
        return len(self.graphs)

    @property
    def classes(self) -> list[int]:
        return sorted(set(self.targets))


def basic(kind: str, n: int) -> Graph:
    if n < 1:
        raise ValueError("n must be at least 1")
    if kind == "cycle":
        return _cycle(n)
    if kind == "complete":
        return _clique(n)
    if kind == "path":
        return Graph(n, tuple((i, i + 1) for i in range(n - 1)))
    if kind == "empty":
        return Graph(n)
    raise ValueError(f"unknown basic graph kind {kind!r}")


def union_all(parts: Iterable[Graph]) -> Graph:
    out = Graph(0)
    for p in parts:
        out = disjoint_union(out, p)
    return out


def circulant(n: int, skips: Iterable[int]) -> Graph:
    """Circulant graph on ``Z_n``; a skip of exactly ``n/2`` adds the antipodal matching."""
    if n < 3:
        raise ValueError("circulant graphs need n >= 3")
    edges = set()
    for s in set(skips):
        if not 1 <= s <= n / 2:
            raise ValueError(f"skip {s} outside 1..{n // 2}")
        for i in range(n):
            j = (i + s) % n
            edges.add((min(i, j), max(i, j)))
    return Graph(n, tuple(edges))


def regular_single_orbit(n: int, i: int) -> Graph:
    """An ``i``-regular vertex-transitive graph on an even number of vertices."""
    if n % 2:
        raise ValueError("n must be even")
    if not 0 <= i <= n - 1:
        raise ValueError(f"degree {i} outside 0..{n - 1}")
    skips = set(range(1, i // 2 + 1))
    if i % 2:
        skips.add(n // 2)
    return circulant(n, skips) if skips else Graph(n)


def _separator_pair(n: int):
    if n < 6:
        raise ValueError("separator_pair needs n >= 6")
    g = _cycle(n)
    h = disjoint_union(_cycle((n + 1) // 2), _cycle(n // 2))
    return [g, h], _cycle(n // 2), [1, 0]


def _separability_set(n: int, m: int = 4):
    if n < 10:
        raise ValueError("separability_set needs n >= 10")
    if m < 2:
        raise ValueError("separability_set needs m >= 2")
    halves = disjoint_union(_cycle((n + 1) // 2 - 2), _cycle(n // 2 - 2))
    whole = _cycle(n - 4)
    graphs, targets = [], []
    for i in range(1, m + 1):
        core = halves if i % 2 else whole
        graphs.append(disjoint_union(Graph(i), core))
        targets.append(0 if i % 2 else 1)
    return graphs, whole, targets


def _shrink_pair(n: int):
    if n < 10:
        raise ValueError("shrink_pair needs n >= 10")
    iso = Graph(n)
    g = union_all([_clique(n), iso])
    h = union_all([_clique(3), _cycle(n - 3), iso])
    return [g, h], _cycle(3), [1, 0]


def _circulant8_pair(n: int | None = None):
    g = circulant(8, {1, 2})
    h = circulant(8, {1, 3})
    return [g, h], _cycle(3), [1, 0]


CONSTRUCTIONS = {
    "separator_pair": _separator_pair,
    "separability_set": _separability_set,
    "shrink_pair": _shrink_pair,
    "circulant8_pair": _circulant8_pair,
}


def construction(kind: str, n: int | None = None, m: int = 4):
    """Return ``(graphs, F, targets)`` for a named construction.

    ``m`` only matters for ``separability_set``, where it is the number of graphs.
    """
    kind = kind.replace("-", "_")
    aliases = {"separator": "separator_pair", "separability": "separability_set",
               "shrink": "shrink_pair", "circulant8": "circulant8_pair"}
    kind = aliases.get(kind, kind)
    if kind not in CONSTRUCTIONS:
        raise ValueError(f"unknown construction {kind!r}")
    if kind == "separability_set":
        return _separability_set(n, m)
    if kind == "circulant8_pair":
        return _circulant8_pair()
    return CONSTRUCTIONS[kind](n)


def graph_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def er_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """G(n, p); pairs are decided in lexicographic order from one uniform draw each."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    pairs = list(itertools.combinations(range(n), 2))
    if not pairs:
        return Graph(n)
    keep = rng.random(len(pairs)) < p
    return Graph(n, tuple(e for e, k in zip(pairs, keep) if k))


def er_dataset(count: int, n: int, p: float, target_pattern: Graph, seed: int,
               induced: bool = True) -> LabeledDataset:
    if target_pattern.n > 6:
        raise ValueError("target patterns are limited to 6 vertices")
    graphs = tuple(er_graph(n, p, graph_rng(seed, i)) for i in range(count))
    targets = tuple(count_subgraphs(g, target_pattern, induced=induced) for g in graphs)
    prov = {"construction": "er", "count": count, "n": n, "p": p,
            "pattern_order": target_pattern.n, "pattern_edges": [list(e) for e in target_pattern.edges],
            "count_mode": "induced" if induced else "partial"}
    return LabeledDataset(graphs, targets, seed, prov, (target_pattern,))
