"""Joint 1-WL color refinement over a collection of graphs.

All graphs in one run share a relabeling table keyed by
``(iteration, previous color, sorted neighbor colors)``, and fresh ids come
from a single counter in first-encounter order.  Ids therefore never repeat
across iterations and two runs over the same collection agree bit for bit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import Graph
from .subgraphs import PatternSet, label_f

__all__ = ["ColoringTrace", "refine", "refine_wl", "refine_wlf", "distinguishes", "UNTIL_STABLE"]

UNTIL_STABLE = "until-stable"

_tokens = itertools.count()


@dataclass(frozen=True, eq=False)
class ColoringTrace:
    """Per-iteration colorings of a graph collection.

    ``colors[t][g]`` is an int array over the vertices of graph ``g``.  When the
    run stopped at the stable iteration, later iterations are served by
    repeating the stable coloring (keyed under their own iteration index).
    """

    colors: tuple[tuple[np.ndarray, ...], ...]
    sigma: tuple[tuple[int, ...], ...]
    relabel_table: dict
    stable_at: int | None
    fixed_horizon: bool
    sizes: tuple[int, ...]
    token: int = field(default_factory=lambda: next(_tokens))

    @property
    def computed(self) -> int:
        return len(self.colors) - 1

    @property
    def num_graphs(self) -> int:
        return len(self.sizes)

    def check_horizon(self, t: int) -> None:
        if t < 0:
            raise ValueError("iteration must be non-negative")
        if t > self.computed and self.fixed_horizon:
            raise ValueError(f"iteration {t} beyond the computed horizon {self.computed}")

    def coloring(self, g: int, t: int) -> np.ndarray:
        self.check_horizon(t)
        if not 0 <= g < self.num_graphs:
            raise IndexError(f"graph index {g} out of range")
        return self.colors[min(t, self.computed)][g]

    def histogram(self, g: int, t: int) -> dict[int, int]:
        """Color multiplicities of graph ``g`` at iteration ``t`` (colors sorted)."""
        vals, counts = np.unique(self.coloring(g, t), return_counts=True)
        return dict(zip(vals.tolist(), counts.tolist()))


def _partition_size(level: Sequence[np.ndarray]) -> int:
    return len(set(itertools.chain.from_iterable(c.tolist() for c in level)))


def refine(graphs: Sequence[Graph], initial=None, T: int | str = UNTIL_STABLE) -> ColoringTrace:
    """Run 1-WL jointly on ``graphs`` starting from ``initial`` labels.

    ``initial`` is a per-graph list of vertex labels (default: the graphs' own
    labels).  ``T`` is a number of iterations, or ``"until-stable"``.
    """
    graphs = list(graphs)
    if initial is None:
        initial = [g.label_list() for g in graphs]
    if len(initial) != len(graphs):
        raise ValueError("one initial labeling per graph is required")
    for g, lab in zip(graphs, initial):
        if len(lab) != g.n:
            raise ValueError(f"initial labeling has {len(lab)} entries for a {g.n}-vertex graph")
    until_stable = T == UNTIL_STABLE
    if not until_stable:
        T = int(T)
        if T < 0:
            raise ValueError("T must be non-negative")

    table: dict = {}
    counter = itertools.count()
    # iteration 0: sorted distinct initial labels get ids 0..k-1
    for lab in sorted({int(x) for lab in initial for x in lab}):
        table[(0, lab)] = next(counter)
    level = tuple(np.array([table[(0, int(x))] for x in lab], dtype=np.int64) for lab in initial)
    colors = [level]
    size = _partition_size(level)
    stable_at = None
    t = 0
    total = sum(g.n for g in graphs)
    while True:
        if not until_stable and t == T:
            break
        t += 1
        prev = colors[-1]
        nxt = []
        for g, pc in zip(graphs, prev):
            pcl = pc.tolist()
            out = np.empty(g.n, dtype=np.int64)
            for v in range(g.n):
                key = (t, pcl[v], tuple(sorted(pcl[u] for u in g.neighbors[v])))
                cid = table.get(key)
                if cid is None:
                    cid = table[key] = next(counter)
                out[v] = cid
            nxt.append(out)
        new_size = _partition_size(nxt)
        if new_size == size and stable_at is None:
            stable_at = t - 1
            if until_stable:
                break
        colors.append(tuple(nxt))
        size = new_size
        if until_stable and t > total + 1:  # cannot happen for a correct refinement
            raise RuntimeError("refinement failed to stabilize")
    sigma = tuple(tuple(sorted(set(itertools.chain.from_iterable(c.tolist() for c in lvl)))) for lvl in colors)
    return ColoringTrace(
        colors=tuple(colors),
        sigma=sigma,
        relabel_table=table,
        stable_at=stable_at,
        fixed_horizon=not until_stable,
        sizes=tuple(g.n for g in graphs),
    )


def refine_wl(graphs: Sequence[Graph], T: int | str = UNTIL_STABLE) -> ColoringTrace:
    return refine(graphs, None, T)


def refine_wlf(graphs: Sequence[Graph], patterns: PatternSet | Sequence[Graph], T: int | str = UNTIL_STABLE) -> ColoringTrace:
    """1-WL seeded with pattern-membership labels (plain 1-WL when ``patterns`` is empty)."""
    if not isinstance(patterns, PatternSet):
        patterns = PatternSet(patterns)
    return refine(graphs, [label_f(g, patterns) for g in graphs], T)


def distinguishes(trace: ColoringTrace, g: int, h: int, t: int) -> bool:
    return trace.histogram(g, t) != trace.histogram(h, t)
