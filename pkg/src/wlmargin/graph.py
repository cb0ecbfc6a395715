"""Undirected simple graphs with optional integer vertex labels.

Vertices are dense integers ``0..n-1`` and edges are stored canonically as
``(min, max)`` pairs in sorted order, so iteration order is reproducible.
An unlabeled graph behaves exactly like a graph labeled ``0`` everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Graph",
    "disjoint_union",
    "is_isomorphic_small",
    "embeddings",
    "SizeCapError",
    "ISOMORPHISM_CAP",
]

ISOMORPHISM_CAP = 10


class SizeCapError(ValueError):
    """Raised when an exhaustive routine is asked to handle a graph above its cap."""


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...] = ()
    labels: tuple[int, ...] | None = None
    _nbrs: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            canon.add((u, v) if u < v else (v, u))
        if len(canon) != len(self.edges):
            raise ValueError("duplicate edges")
        labels = self.labels
        if labels is not None:
            labels = tuple(int(x) for x in labels)
            if len(labels) != n:
                raise ValueError(f"expected {n} labels, got {len(labels)}")
            if any(x < 0 for x in labels):
                raise ValueError("labels must be non-negative integers")
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in canon:
            nbrs[u].append(v)
            nbrs[v].append(u)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_nbrs", tuple(tuple(sorted(a)) for a in nbrs))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], labels=None) -> "Graph":
        """Build a graph, silently merging duplicate or reversed edges."""
        seen = {(min(u, v), max(u, v)) for u, v in edges}
        return cls(n, tuple(seen), None if labels is None else tuple(labels))

    # adjacency view

    @property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        return self._nbrs

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self._nbrs)

    @cached_property
    def adjacency_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(a) for a in self._nbrs)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency_sets[u]

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def label_list(self) -> list[int]:
        return list(self.labels) if self.labels is not None else [0] * self.n

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def with_labels(self, labels) -> "Graph":
        return Graph(self.n, self.edges, None if labels is None else tuple(labels))

    def relabeled(self, perm: Sequence[int]) -> "Graph":
        """Return the isomorphic copy where vertex ``v`` becomes ``perm[v]``."""
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm must be a permutation of 0..n-1")
        edges = tuple((perm[u], perm[v]) for u, v in self.edges)
        labels = None
        if self.labels is not None:
            new = [0] * self.n
            for v, lab in enumerate(self.labels):
                new[perm[v]] = lab
            labels = tuple(new)
        return Graph.from_edges(self.n, edges, labels)

    def induced(self, vertices: Sequence[int]) -> "Graph":
        index = {v: i for i, v in enumerate(vertices)}
        edges = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        labels = None if self.labels is None else [self.labels[v] for v in vertices]
        return Graph.from_edges(len(index), edges, labels)

    def connected_components(self) -> list[list[int]]:
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            stack, comp = [s], []
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in self._nbrs[u]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.connected_components()) == 1

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n, self.edges, self.label_list()) == (other.n, other.edges, other.label_list())

    def __hash__(self):
        return hash((self.n, self.edges, tuple(self.label_list())))


def disjoint_union(g: Graph, h: Graph) -> Graph:
    """Disjoint union with ``h``'s vertices shifted by ``g.n``."""
    shift = g.n
    edges = g.edges + tuple((u + shift, v + shift) for u, v in h.edges)
    labels = None
    if g.labels is not None or h.labels is not None:
        labels = tuple(g.label_list() + h.label_list())
    return Graph(g.n + h.n, edges, labels)


def _search_order(pattern: Graph, first: int | None = None) -> list[int]:
    """Order pattern vertices so each one (after the first) touches many earlier ones."""
    n = pattern.n
    if n == 0:
        return []
    deg = pattern.degrees
    order: list[int] = []
    placed = [False] * n
    conn = [0] * n
    while len(order) < n:
        if not order and first is not None:
            v = first
        else:
            v = max(
                (u for u in range(n) if not placed[u]),
                key=lambda u: (conn[u], deg[u], -u),
            )
        placed[v] = True
        order.append(v)
        for w in pattern.neighbors[v]:
            conn[w] += 1
    return order


def embeddings(
    pattern: Graph,
    host: Graph,
    induced: bool = True,
    anchor: tuple[int, int] | None = None,
) -> Iterator[tuple[int, ...]]:
    """Enumerate label-preserving embeddings of ``pattern`` into ``host``.

    Yields tuples ``m`` with ``m[p]`` the host vertex of pattern vertex ``p``.
    With ``induced=True`` non-edges must map to non-edges as well.  ``anchor``
    ``(p, v)`` pins pattern vertex ``p`` to host vertex ``v``.
    """
    k = pattern.n
    if k == 0:
        yield ()
        return
    if k > host.n:
        return
    plab = pattern.label_list()
    hlab = host.label_list()
    pdeg = pattern.degrees
    hdeg = host.degrees
    hadj = host.adjacency_sets
    order = _search_order(pattern, None if anchor is None else anchor[0])
    # for each step: earlier pattern vertices, and whether each is adjacent
    back = []
    for i, p in enumerate(order):
        prev = [(q, pattern.has_edge(p, q)) for q in order[:i]]
        nb = [q for q, e in prev if e]
        back.append((prev, nb[0] if nb else None))
    mapping = [-1] * k
    used = set()

    def candidates(i):
        if i == 0 and anchor is not None:
            return (anchor[1],)
        _, via = back[i]
        if via is not None:
            return host.neighbors[mapping[via]]
        return range(host.n)

    def extend(i):
        if i == k:
            yield tuple(mapping)
            return
        p = order[i]
        prev, _ = back[i]
        for v in candidates(i):
            if v in used or hdeg[v] < pdeg[p] or hlab[v] != plab[p]:
                continue
            ok = True
            for q, is_edge in prev:
                adj = mapping[q] in hadj[v]
                if is_edge and not adj:
                    ok = False
                    break
                if induced and adj and not is_edge:
                    ok = False
                    break
            if not ok:
                continue
            mapping[p] = v
            used.add(v)
            yield from extend(i + 1)
            used.discard(v)
            mapping[p] = -1

    yield from extend(0)


def is_isomorphic_small(g: Graph, h: Graph) -> bool:
    """Exact isomorphism test by backtracking; both graphs must have at most 10 vertices."""
    if max(g.n, h.n) > ISOMORPHISM_CAP:
        raise SizeCapError(f"is_isomorphic_small is capped at {ISOMORPHISM_CAP} vertices")
    if g.n != h.n or g.num_edges != h.num_edges:
        return False
    if sorted(zip(g.degrees, g.label_list())) != sorted(zip(h.degrees, h.label_list())):
        return False
    # an induced embedding between equal-order graphs is an isomorphism
    return next(embeddings(g, h, induced=True), None) is not None
