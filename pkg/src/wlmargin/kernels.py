"""WL and WLOA feature maps, kernels and Gram matrices.

Features are keyed by ``(t, color)`` (plus a unary slot ``j`` for WLOA) and
remember which trace produced them.  Colors from different traces are
unrelated, so mixing features across traces raises ``IncomparableFeatures``.
Iterations always run over ``t = 0..T`` inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .refinement import ColoringTrace, refine
from .subgraphs import PatternSet, label_f

__all__ = [
    "IncomparableFeatures",
    "SparseFeature",
    "GramMatrix",
    "wl_feature",
    "normalize",
    "k_wl",
    "k_wloa",
    "wloa_feature",
    "wloa_sq_distance",
    "wl_sq_distance",
    "feature_matrix",
    "wloa_feature_matrix",
    "wloa_gram_matrix",
    "cosine_normalize",
    "gram",
    "build_trace",
]


class IncomparableFeatures(ValueError):
    """Features come from different traces, horizons or kinds."""


@dataclass(frozen=True)
class SparseFeature:
    entries: dict
    kind: str  # wl-count | wl-normalized | wloa-unary
    T: int
    token: int

    def norm(self) -> float:
        return math.sqrt(sum(float(v) * float(v) for v in self.entries.values()))

    def dot(self, other: "SparseFeature"):
        _check_compatible(self, other)
        small, big = sorted((self.entries, other.entries), key=len)
        return sum(v * big[k] for k, v in small.items() if k in big)

    def sq_distance(self, other: "SparseFeature"):
        _check_compatible(self, other)
        keys = self.entries.keys() | other.entries.keys()
        return sum((self.entries.get(k, 0) - other.entries.get(k, 0)) ** 2 for k in keys)


def _check_compatible(a: SparseFeature, b: SparseFeature) -> None:
    if a.token != b.token:
        raise IncomparableFeatures("features come from different colorings")
    if a.T != b.T or a.kind != b.kind:
        raise IncomparableFeatures(f"feature kinds differ: {a.kind}/T={a.T} vs {b.kind}/T={b.T}")


def wl_feature(trace: ColoringTrace, g: int, T: int) -> SparseFeature:
    trace.check_horizon(T)
    entries = {}
    for t in range(T + 1):
        for c, k in trace.histogram(g, t).items():
            entries[(t, c)] = k
    return SparseFeature(entries, "wl-count", T, trace.token)


def normalize(f: SparseFeature) -> SparseFeature:
    nrm = f.norm()
    if nrm == 0:
        raise ValueError("cannot normalize the zero vector")
    return SparseFeature({k: v / nrm for k, v in f.entries.items()}, "wl-normalized", f.T, f.token)


def k_wl(fa: SparseFeature, fb: SparseFeature):
    return fa.dot(fb)


def _check_pair(trace: ColoringTrace, g: int, h: int, T: int) -> None:
    trace.check_horizon(T)
    for i in (g, h):
        if not 0 <= i < trace.num_graphs:
            raise IndexError(f"graph index {i} out of range")


def k_wloa(trace: ColoringTrace, g: int, h: int, T: int) -> int:
    """Histogram intersection summed over iterations 0..T."""
    _check_pair(trace, g, h, T)
    total = 0
    for t in range(T + 1):
        hg, hh = trace.histogram(g, t), trace.histogram(h, t)
        total += sum(min(k, hh[c]) for c, k in hg.items() if c in hh)
    return total


def wloa_feature(trace: ColoringTrace, g: int, T: int) -> SparseFeature:
    """Unary encoding: slot ``(t, c, j)`` is 1 iff color ``c`` occurs at least ``j`` times."""
    trace.check_horizon(T)
    entries = {}
    for t in range(T + 1):
        for c, k in trace.histogram(g, t).items():
            for j in range(1, k + 1):
                entries[(t, c, j)] = 1
    return SparseFeature(entries, "wloa-unary", T, trace.token)


def wloa_sq_distance(trace: ColoringTrace, g: int, h: int, T: int) -> int:
    """Squared distance of unary features, via ``sum |a_c - b_c|``."""
    _check_pair(trace, g, h, T)
    total = 0
    for t in range(T + 1):
        hg, hh = trace.histogram(g, t), trace.histogram(h, t)
        for c in hg.keys() | hh.keys():
            total += abs(hg.get(c, 0) - hh.get(c, 0))
    return total


def wl_sq_distance(trace: ColoringTrace, g: int, h: int, T: int) -> int:
    _check_pair(trace, g, h, T)
    return wl_feature(trace, g, T).sq_distance(wl_feature(trace, h, T))


def _columns(trace: ColoringTrace, T: int, graphs: Sequence[int]):
    rows, keys, vals = [], [], []
    for r, g in enumerate(graphs):
        for t in range(T + 1):
            for c, k in trace.histogram(g, t).items():
                rows.append(r)
                keys.append((t, c))
                vals.append(k)
    return rows, keys, vals


def feature_matrix(trace: ColoringTrace, T: int, normalized: bool = False, graphs=None):
    """Stack WL features as a CSR matrix; returns ``(matrix, column_keys)``."""
    trace.check_horizon(T)
    graphs = range(trace.num_graphs) if graphs is None else graphs
    rows, keys, vals = _columns(trace, T, graphs)
    columns = sorted(set(keys))
    index = {k: i for i, k in enumerate(columns)}
    data = np.asarray(vals, dtype=np.float64)
    mat = sp.csr_matrix((data, (rows, [index[k] for k in keys])), shape=(len(graphs), len(columns)))
    if normalized:
        norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
        if np.any(norms == 0):
            raise ValueError("cannot normalize an empty graph's features")
        mat = sp.diags(1.0 / norms) @ mat
        mat = mat.tocsr()
    return mat, columns


def wloa_feature_matrix(trace: ColoringTrace, T: int, normalized: bool = False, graphs=None):
    """Stack unary WLOA features as CSR; each row has ``(T+1)*n`` ones."""
    trace.check_horizon(T)
    graphs = range(trace.num_graphs) if graphs is None else graphs
    rows, keys = [], []
    for r, g in enumerate(graphs):
        for t in range(T + 1):
            for c, k in trace.histogram(g, t).items():
                for j in range(1, k + 1):
                    rows.append(r)
                    keys.append((t, c, j))
    columns = sorted(set(keys))
    index = {k: i for i, k in enumerate(columns)}
    data = np.ones(len(keys))
    mat = sp.csr_matrix((data, (rows, [index[k] for k in keys])), shape=(len(graphs), len(columns)))
    if normalized:
        norms = np.sqrt(np.asarray(mat.sum(axis=1)).ravel())
        if np.any(norms == 0):
            raise ValueError("cannot normalize an empty graph's features")
        mat = (sp.diags(1.0 / norms) @ mat).tocsr()
    return mat, columns


def wloa_gram_matrix(trace: ColoringTrace, T: int, graphs=None) -> np.ndarray:
    """Integer WLOA Gram matrix by per-color histogram intersection."""
    counts, _ = feature_matrix(trace, T, graphs=graphs)
    csc = counts.tocsc()
    s = counts.shape[0]
    out = np.zeros((s, s), dtype=np.int64)
    for j in range(csc.shape[1]):
        lo, hi = csc.indptr[j], csc.indptr[j + 1]
        r = csc.indices[lo:hi]
        v = csc.data[lo:hi].astype(np.int64)
        out[np.ix_(r, r)] += np.minimum.outer(v, v)
    return out


def cosine_normalize(k: np.ndarray) -> np.ndarray:
    d = np.diag(k).astype(np.float64)
    if np.any(d <= 0):
        raise ValueError("cosine normalization needs a strictly positive diagonal")
    s = np.sqrt(d)
    return k / np.outer(s, s)


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    kind: str
    normalized: bool
    T: int
    patterns: str = "none"

    @property
    def size(self) -> int:
        return self.values.shape[0]


def build_trace(graphs: Sequence[Graph], patterns: PatternSet | None, T: int | str) -> ColoringTrace:
    if patterns:
        return refine(graphs, [label_f(g, patterns) for g in graphs], T)
    return refine(graphs, None, T)


def gram(graphs: Sequence[Graph], kind: str = "wl", patterns: PatternSet | None = None,
         T: int = 3, normalized: bool = True, trace: ColoringTrace | None = None) -> GramMatrix:
    if not graphs:
        raise ValueError("empty collection")
    if trace is None:
        trace = build_trace(graphs, patterns, T)
    if kind == "wl":
        x, _ = feature_matrix(trace, T)
        k = (x @ x.T).toarray()
    elif kind == "wloa":
        k = wloa_gram_matrix(trace, T).astype(np.float64)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    if normalized:
        k = cosine_normalize(k)
    k = 0.5 * (k + k.T)
    desc = patterns.describe() if patterns else "none"
    return GramMatrix(k, kind, normalized, T, desc)
