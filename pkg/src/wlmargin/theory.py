"""Executable checks for how pattern labels change WL/WLOA geometry.

Distances in the WLOA checks are exact integers: the squared distance of two
unary encodings equals ``sum_t sum_c |a_c - b_c|`` over color counts.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph
from .kernels import feature_matrix, wloa_sq_distance
from .margin import as_dense, hard_margin
from .refinement import ColoringTrace, refine_wl, refine_wlf
from .subgraphs import PatternSet, covered_vertices

__all__ = [
    "RefinementViolation",
    "ColorSplitMap",
    "color_split_map",
    "wloa_distance_preserved",
    "wloa_distances",
    "margin_growth_condition",
    "f_condition_holds",
    "grow_check",
]


class RefinementViolation(RuntimeError):
    """A pattern-seeded color has two different plain-WL parents."""


@dataclass(frozen=True)
class ColorSplitMap:
    children: dict  # t -> {wl color: sorted tuple of WL_F colors}
    parent: dict  # t -> {WL_F color: wl color}

    def split(self, t: int, c: int) -> tuple[int, ...]:
        return self.children[t].get(c, ())


def color_split_map(trace_wl: ColoringTrace, trace_wlf: ColoringTrace, T: int) -> ColorSplitMap:
    """Map every WL color at each ``t <= T`` to the WL_F colors that refine it."""
    if trace_wl.sizes != trace_wlf.sizes:
        raise ValueError("traces cover different collections")
    children, parent = {}, {}
    for t in range(T + 1):
        par: dict[int, int] = {}
        kids: dict[int, set] = defaultdict(set)
        for g in range(trace_wl.num_graphs):
            for c, cf in zip(trace_wl.coloring(g, t).tolist(), trace_wlf.coloring(g, t).tolist()):
                old = par.setdefault(cf, c)
                if old != c:
                    raise RefinementViolation(f"color {cf} at t={t} has parents {old} and {c}")
                kids[c].add(cf)
        parent[t] = par
        children[t] = {c: tuple(sorted(v)) for c, v in kids.items()}
    return ColorSplitMap(children, parent)


def _pair_traces(g: Graph, h: Graph, patterns: PatternSet, T: int):
    return refine_wl([g, h], T), refine_wlf([g, h], patterns, T)


def wloa_distances(g: Graph, h: Graph, patterns, T: int) -> tuple[int, int]:
    """Exact squared WLOA distances ``(plain, with patterns)`` between ``g`` and ``h``."""
    if not isinstance(patterns, PatternSet):
        patterns = PatternSet(patterns)
    tw, tf = _pair_traces(g, h, patterns, T)
    return wloa_sq_distance(tw, 0, 1, T), wloa_sq_distance(tf, 0, 1, T)


def wloa_distance_preserved(g: Graph, h: Graph, patterns, T: int):
    """Check that every WL color's split keeps the count comparison one-sided.

    For each ``t`` and WL color ``c``: if ``G`` has at least as many ``c``
    vertices as ``H``, every child color must favour ``G`` weakly too, and
    symmetrically.  That is exactly the case where splitting ``c`` leaves
    ``|a_c - b_c|`` unchanged, so the result is ``True`` iff the WLOA distance
    does not grow.  Returns ``(ok, witness)`` with witness ``(t, c, c')``.
    """
    if g.n != h.n:
        raise ValueError("graphs must have the same order")
    if not isinstance(patterns, PatternSet):
        patterns = PatternSet(patterns)
    tw, tf = _pair_traces(g, h, patterns, T)
    split = color_split_map(tw, tf, T)
    for t in range(T + 1):
        a, b = tw.histogram(0, t), tw.histogram(1, t)
        af, bf = tf.histogram(0, t), tf.histogram(1, t)
        for c in sorted(split.children[t]):
            ac, bc = a.get(c, 0), b.get(c, 0)
            for cf in split.children[t][c]:
                x, y = af.get(cf, 0), bf.get(cf, 0)
                if (ac >= bc and x < y) or (ac <= bc and x > y):
                    return False, (t, c, cf)
    return True, None


def _sq_dists(x: np.ndarray) -> np.ndarray:
    sq = (x * x).sum(axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    return np.maximum(d, 0.0)


def margin_growth_condition(before, after, labels):
    """Compare distance growth across classes with growth inside classes.

    Returns ``(holds, delta_min, delta_max)`` where ``delta_min`` is the least
    increase in squared distance over pairs from different classes and
    ``delta_max`` the largest increase over same-class pairs, including each
    point with itself.
    """
    xb, xa = as_dense(before), as_dense(after)
    y = np.asarray(labels)
    if not (len(xb) == len(xa) == len(y)):
        raise ValueError("feature sets and labels must align")
    if len(set(y.tolist())) != 2:
        raise ValueError("exactly two classes are required")
    delta = _sq_dists(xa) - _sq_dists(xb)
    same = y[:, None] == y[None, :]
    dmin = float(delta[~same].min())
    dmax = max(float(delta[same].max()), 0.0)
    return dmin > dmax, dmin, dmax


def f_condition_holds(graphs: Sequence[Graph], targets: Sequence[int], patterns) -> bool:
    """Every class-0 graph hits some pattern and no class-1 graph hits any."""
    if not isinstance(patterns, PatternSet):
        patterns = PatternSet(patterns)
    if not set(targets) <= {0, 1}:
        raise ValueError("binary targets required")

    def hits(g):
        return any(covered_vertices(g, f) for f in patterns)

    return all(hits(g) if y == 0 else not hits(g) for g, y in zip(graphs, targets))


def grow_check(g: Graph, h: Graph, patterns) -> dict:
    """Margins of a connected same-order pair before and after pattern labels.

    Uses unnormalized count features at ``T`` = the plain-WL stable iteration of
    the pair.  ``g`` is the class-1 graph.  Reports margins, half-distances,
    max feature norms and the bound ``sqrt(2n)``.
    """
    if g.n != h.n:
        raise ValueError("graphs must have the same order")
    if not isinstance(patterns, PatternSet):
        patterns = PatternSet(patterns)
    T = refine_wl([g, h]).stable_at
    out = {"T": T, "n": g.n, "bound": math.sqrt(2 * g.n)}
    for name, trace in (("wl", refine_wl([g, h], T)), ("wlf", refine_wlf([g, h], patterns, T))):
        x, _ = feature_matrix(trace, T)
        res = hard_margin(x, [1, 0])
        out[f"{name}_lambda"] = res.lam
        out[f"{name}_distance"] = 2 * res.lam
        out[f"{name}_radius"] = res.radius
    return out
