"""Induced-subgraph vertex labels that seed the 1-WL_F refinement.

A vertex gets bit ``i`` when it lies in some vertex set ``X`` whose induced
subgraph is isomorphic to the ``i``-th pattern.  Cliques and cycles have
dedicated searches (any order); every other pattern goes through the generic
backtracking matcher and is capped at 8 vertices.
"""

from __future__ import annotations

import itertools
import re
from functools import lru_cache
from typing import Iterable, Sequence

from .graph import Graph, SizeCapError, embeddings, is_isomorphic_small, ISOMORPHISM_CAP

__all__ = [
    "PATTERN_CAP",
    "PatternSet",
    "named_pattern",
    "parse_patterns",
    "pattern_family",
    "contains_induced_at",
    "covered_vertices",
    "label_f",
    "count_subgraphs",
    "automorphism_count",
]

PATTERN_CAP = 8


def cycle(k: int) -> Graph:
    if k < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return Graph(k, tuple((i, (i + 1) % k) for i in range(k)))


def clique(k: int) -> Graph:
    if k < 1:
        raise ValueError("a clique needs at least 1 vertex")
    return Graph(k, tuple(itertools.combinations(range(k), 2)))


_NAME = re.compile(r"^([ck])(\d+)$")


def named_pattern(name: str) -> Graph:
    """``c3`` .. ``cN`` are cycles, ``k1`` .. ``kN`` complete graphs."""
    m = _NAME.match(name.strip().lower())
    if not m:
        raise ValueError(f"unknown pattern name {name!r}; use cN or kN")
    kind, k = m.group(1), int(m.group(2))
    return cycle(k) if kind == "c" else clique(k)


def pattern_family(f: Graph) -> tuple[str, int]:
    """Classify a pattern as ``clique``, ``cycle`` or ``generic`` (with its order)."""
    k = f.n
    if f.labels is not None and len(set(f.labels)) > 1:
        return ("generic", k)
    if f.num_edges == k * (k - 1) // 2:
        return ("clique", k)
    if k >= 3 and all(d == 2 for d in f.degrees) and f.is_connected():
        return ("cycle", k)
    return ("generic", k)


@lru_cache(maxsize=256)
def _canonical_edges(f: Graph) -> tuple:
    """Lexicographically smallest relabeled edge list, permuting within degree classes."""
    order = sorted(range(f.n), key=lambda v: (f.degrees[v], f.label_list()[v]))
    classes = [list(g) for _, g in itertools.groupby(order, key=lambda v: (f.degrees[v], f.label_list()[v]))]
    best = None
    for parts in itertools.product(*(itertools.permutations(c) for c in classes)):
        seq = [v for part in parts for v in part]
        pos = {v: i for i, v in enumerate(seq)}
        key = tuple(sorted((min(pos[u], pos[v]), max(pos[u], pos[v])) for u, v in f.edges))
        if best is None or key < best:
            best = key
    return best


def _sort_key(f: Graph):
    family, k = pattern_family(f)
    rank = {"clique": 0, "cycle": 1, "generic": 2}[family]
    canon = _canonical_edges(f) if family == "generic" else ()
    return (f.n, f.num_edges, rank, canon, tuple(f.label_list()) if family == "generic" else ())


def _check_pattern(f: Graph) -> None:
    family, k = pattern_family(f)
    if family == "generic" and k > PATTERN_CAP:
        raise SizeCapError(f"generic patterns are capped at {PATTERN_CAP} vertices (got {k})")


def _same_pattern(a: Graph, b: Graph) -> bool:
    fa, fb = pattern_family(a), pattern_family(b)
    if fa[0] != "generic" or fb[0] != "generic":
        return fa == fb
    if max(a.n, b.n) > ISOMORPHISM_CAP:
        return False
    return is_isomorphic_small(a, b)


class PatternSet:
    """A canonically ordered, duplicate-free list of patterns."""

    def __init__(self, patterns: Iterable[Graph] = ()):
        pats = list(patterns)
        for f in pats:
            _check_pattern(f)
        for a, b in itertools.combinations(pats, 2):
            if _same_pattern(a, b):
                raise ValueError("patterns must be pairwise non-isomorphic")
        self.patterns: tuple[Graph, ...] = tuple(sorted(pats, key=_sort_key))

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "PatternSet":
        return cls(named_pattern(x) for x in names)

    def __len__(self):
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def __bool__(self):
        return bool(self.patterns)

    def describe(self) -> str:
        parts = []
        for f in self.patterns:
            family, k = pattern_family(f)
            if family == "clique" and k == 3:
                family = "cycle"  # the triangle reads more naturally as c3
            parts.append({"clique": f"k{k}", "cycle": f"c{k}"}.get(family, f"g{k}e{f.num_edges}"))
        return "+".join(parts) if parts else "none"

    def __repr__(self):
        return f"PatternSet({self.describe()})"


def parse_patterns(spec: str | Sequence[str] | None) -> PatternSet:
    """Parse ``"c3,k4"`` style specs (or a list of names) into a PatternSet."""
    if spec is None:
        return PatternSet()
    if isinstance(spec, str):
        spec = [s for s in spec.split(",") if s.strip() and s.strip().lower() != "none"]
    return PatternSet.from_names(spec)


# searches returning a witness vertex set through ``v`` (or None)


def _clique_through(g: Graph, v: int, k: int):
    if k == 1:
        return (v,)
    adj = g.adjacency_sets

    def grow(chosen, cand):
        if len(chosen) == k:
            return tuple(chosen)
        need = k - len(chosen)
        for u in sorted(cand):
            if len(cand) < need:
                return None
            if g.degrees[u] < k - 1:
                continue
            found = grow(chosen + [u], cand & adj[u] - {w for w in cand if w <= u})
            if found:
                return found
        return None

    if g.degrees[v] < k - 1:
        return None
    return grow([v], set(adj[v]))


def _chordless_cycle_through(g: Graph, v: int, k: int):
    adj = g.adjacency_sets
    if g.degrees[v] < 2:
        return None
    path = [v]
    on_path = {v}

    def extend():
        last = path[-1]
        j = len(path)  # index the next vertex takes
        for u in g.neighbors[last]:
            if u in on_path or g.degrees[u] < 2:
                continue
            # no chords to inner path vertices
            if any(w in on_path for w in adj[u] if w != last and w != v):
                continue
            closes = v in adj[u]
            if j == k - 1:
                if closes:
                    return tuple(path + [u])
                continue
            if closes and j > 1:
                continue
            path.append(u)
            on_path.add(u)
            found = extend()
            if found:
                return found
            path.pop()
            on_path.discard(u)
        return None

    if k == 3:
        return _clique_through(g, v, 3)
    return extend()


def _generic_through(g: Graph, v: int, f: Graph):
    for p in range(f.n):
        emb = next(embeddings(f, g, induced=True, anchor=(p, v)), None)
        if emb is not None:
            return emb
    return None


def _witness_through(g: Graph, v: int, f: Graph):
    family, k = pattern_family(f)
    if k > g.n:
        return None
    if family == "clique":
        return _clique_through(g, v, k)
    if family == "cycle":
        return _chordless_cycle_through(g, v, k)
    if k > PATTERN_CAP:
        raise SizeCapError(f"generic patterns are capped at {PATTERN_CAP} vertices (got {k})")
    # unlabeled patterns match whatever labels the host carries
    host = g if f.labels is not None else g.with_labels(None)
    return _generic_through(host, v, f)


def contains_induced_at(g: Graph, v: int, f: Graph) -> bool:
    """True iff some ``X`` containing ``v`` induces a copy of ``f`` in ``g``."""
    if not 0 <= v < g.n:
        raise IndexError(f"vertex {v} out of range")
    return _witness_through(g, v, f) is not None


def covered_vertices(g: Graph, f: Graph) -> frozenset:
    """All vertices of ``g`` lying in at least one induced copy of ``f``."""
    covered: set[int] = set()
    for v in range(g.n):
        if v in covered:
            continue
        w = _witness_through(g, v, f)
        if w is not None:
            covered.update(w)
    return frozenset(covered)


def label_f(g: Graph, fs: PatternSet | Sequence[Graph]) -> list[int]:
    """Initial 1-WL_F labels: prior label and pattern-membership bits, packed injectively."""
    if not isinstance(fs, PatternSet):
        fs = PatternSet(fs)
    prior = g.label_list()
    bits = [0] * g.n
    for i, f in enumerate(fs):
        for v in covered_vertices(g, f):
            bits[v] |= 1 << i
    width = len(fs)
    return [(prior[v] << width) | bits[v] for v in range(g.n)]


@lru_cache(maxsize=64)
def automorphism_count(f: Graph) -> int:
    return sum(1 for _ in embeddings(f, f, induced=True))


def _count_cliques(g: Graph, k: int) -> int:
    adj = g.adjacency_sets

    def count(cand, depth):
        if depth == k:
            return 1
        total = 0
        for u in sorted(cand):
            total += count({w for w in cand & adj[u] if w > u}, depth + 1)
        return total

    return count(set(range(g.n)), 0)


def count_subgraphs(g: Graph, f: Graph, induced: bool = True) -> int:
    """Number of vertex subsets inducing ``f`` (or, if not induced, copies of ``f`` as a subgraph)."""
    family, k = pattern_family(f)
    if k > g.n:
        return 0
    if family == "clique":
        return _count_cliques(g, k)
    if k > PATTERN_CAP:
        raise SizeCapError(f"counting is capped at {PATTERN_CAP}-vertex patterns")
    total = sum(1 for _ in embeddings(f, g.with_labels(None) if f.labels is None else g, induced=induced))
    aut = automorphism_count(f)
    assert total % aut == 0
    return total // aut
