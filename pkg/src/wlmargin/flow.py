"""Linear message passing networks and their gradient flow.

A depth-``L`` linear MPNN maps node features ``X`` (``d x n``) to the scalar
``W_L ... W_1 X A'^L 1`` with ``A' = A + I``.  Everything the risk needs from
a labeled graph is therefore the vector ``v = y X A'^L 1``, and the network
only enters through the row vector ``p = W_L ... W_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit, logsumexp

from .graph import Graph
from .margin import min_norm_point

__all__ = [
    "LinearMpnn",
    "FlowSample",
    "FlowTrajectory",
    "FlowDivergence",
    "augmented_adjacency",
    "forward",
    "risk_and_gradient",
    "finite_difference_check",
    "flow",
    "alignment_metrics",
    "max_margin_reference",
    "balancedness",
    "random_init",
    "toy_separable",
]

LOSSES = ("exponential", "logistic")


class FlowDivergence(RuntimeError):
    """Risk kept increasing after repeated step halving."""


@dataclass
class LinearMpnn:
    weights: list[np.ndarray]

    def __post_init__(self):
        self.weights = [np.atleast_2d(np.asarray(w, dtype=np.float64)) for w in self.weights]
        if not self.weights:
            raise ValueError("need at least one layer")
        for lo, hi in zip(self.weights, self.weights[1:]):
            if hi.shape[1] != lo.shape[0]:
                raise ValueError(f"layer shapes {lo.shape} and {hi.shape} do not chain")
        if self.weights[-1].shape[0] != 1:
            raise ValueError("the last layer must have a single output row")

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    def product(self) -> np.ndarray:
        return _chain(self.weights, 0, self.depth)

    def copy(self) -> "LinearMpnn":
        return LinearMpnn([w.copy() for w in self.weights])


def _chain(ws, lo, hi) -> np.ndarray:
    """``W_hi-1 ... W_lo`` (identity of the right size when empty)."""
    if lo >= hi:
        return np.eye(ws[lo].shape[1] if lo < len(ws) else ws[-1].shape[0])
    out = ws[lo]
    for w in ws[lo + 1: hi]:
        out = w @ out
    return out


def augmented_adjacency(g: Graph) -> np.ndarray:
    return g.adjacency_matrix().astype(np.float64) + np.eye(g.n)


@dataclass
class FlowSample:
    graph: Graph
    x: np.ndarray  # d x n
    y: int  # -1 or +1
    depth: int
    v: np.ndarray = field(init=False)

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        if self.x.shape[1] != self.graph.n:
            raise ValueError("node features need one column per vertex")
        if self.y not in (-1, 1):
            raise ValueError("labels must be -1 or +1")
        a = augmented_adjacency(self.graph)
        walk = np.linalg.matrix_power(a, self.depth) @ np.ones(self.graph.n)
        self.v = self.y * (self.x @ walk)


def forward(m: LinearMpnn, g: Graph, x) -> float:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape != (m.input_dim, g.n):
        raise ValueError(f"expected features of shape {(m.input_dim, g.n)}, got {x.shape}")
    a = augmented_adjacency(g)
    walk = np.linalg.matrix_power(a, m.depth) @ np.ones(g.n)
    return float((m.product() @ x @ walk)[0])


def _stack(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return np.atleast_2d(samples)
    return np.vstack([s.v for s in samples])


def _loss_terms(scores: np.ndarray, loss: str):
    """Mean risk and d(risk)/d(score) per sample, stable for large scores."""
    k = len(scores)
    if loss == "exponential":
        log_r = logsumexp(-scores) - math.log(k)
        risk = 0.0 if log_r < -745 else (math.inf if log_r > 709 else math.exp(log_r))
        with np.errstate(over="ignore"):
            dscore = -np.exp(-scores - math.log(k))
    elif loss == "logistic":
        risk = float(np.mean(np.logaddexp(0.0, -scores)))
        dscore = -expit(-scores) / k
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return risk, dscore


def loss_at_zero(loss: str) -> float:
    return 1.0 if loss == "exponential" else math.log(2.0)


def risk_and_gradient(m: LinearMpnn, samples, loss: str = "exponential"):
    """Risk and the exact gradient with respect to every layer."""
    v = _stack(samples)
    ws = m.weights
    p = m.product()  # 1 x d
    risk, dscore = _loss_terms(v @ p[0], loss)
    if not math.isfinite(risk):
        return risk, [np.full_like(w, math.nan) for w in ws]
    dp = (dscore @ v)[None, :]  # 1 x d
    grads = []
    for j in range(m.depth):
        left = _chain(ws, j + 1, m.depth)  # W_L ... W_{j+1}, 1 x d_j
        right = _chain(ws, 0, j)  # W_{j-1} ... W_1, d_{j-1} x d
        if j + 1 >= m.depth:
            left = np.ones((1, 1))
        grads.append(left.T @ dp @ right.T)
    return risk, grads


def finite_difference_check(m: LinearMpnn, samples, loss: str = "exponential", h: float = 1e-6) -> float:
    """Largest relative error between analytic and central-difference gradients."""
    _, grads = risk_and_gradient(m, samples, loss)
    worst = 0.0
    for j, w in enumerate(m.weights):
        num = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            plus, minus = m.copy(), m.copy()
            plus.weights[j][idx] += h
            minus.weights[j][idx] -= h
            num[idx] = (risk_and_gradient(plus, samples, loss)[0] - risk_and_gradient(minus, samples, loss)[0]) / (2 * h)
        scale = max(np.linalg.norm(grads[j]), np.linalg.norm(num), 1e-300)
        worst = max(worst, float(np.linalg.norm(grads[j] - num) / scale))
    return worst


def balancedness(m: LinearMpnn) -> list[np.ndarray]:
    """``W_j W_j^T - W_{j+1}^T W_{j+1}`` for consecutive layers."""
    ws = m.weights
    return [ws[j] @ ws[j].T - ws[j + 1].T @ ws[j + 1] for j in range(len(ws) - 1)]


def _top_pair(w: np.ndarray):
    u, s, vt = np.linalg.svd(w)
    u1, v1 = u[:, 0], vt[0]
    # fix the sign so the largest-magnitude entry of v1 is positive
    k = int(np.argmax(np.abs(v1)))
    if v1[k] < 0:
        u1, v1 = -u1, -v1
    return s, u1, v1


def alignment_metrics(m: LinearMpnn, ubar: np.ndarray | None = None) -> dict:
    """Rank-1 residuals per layer and alignment of the normalized end-to-end map."""
    norms = [float(np.linalg.norm(w)) for w in m.weights]
    out = {"norms": norms}
    if min(norms) == 0.0:
        out.update(residuals=[math.nan] * m.depth, product_alignment=math.nan, ubar_alignment=math.nan,
                   defined=False)
        return out
    residuals = []
    first_v = None
    for j, w in enumerate(m.weights):
        _, u1, v1 = _top_pair(w)
        residuals.append(float(np.linalg.norm(w / norms[j] - np.outer(u1, v1))))
        if j == 0:
            first_v = v1
    prod = m.product()[0] / math.prod(norms)
    out["residuals"] = residuals
    out["product_alignment"] = float(abs(prod @ first_v))
    out["ubar_alignment"] = float(abs(prod @ ubar)) if ubar is not None else math.nan
    out["defined"] = True
    return out


def max_margin_reference(samples, support_tol: float = 1e-6, rank_tol: float = 1e-9):
    """Max-margin direction of the signed sample vectors.

    Returns ``(gamma, ubar, support, spans)`` where ``spans`` tells whether the
    support vectors span the whole input space.
    """
    v = _stack(samples)
    z, _ = min_norm_point(v)
    gamma = float(np.linalg.norm(z))
    if gamma <= 1e-9:
        raise ValueError("samples are not separable by a linear MPNN")
    ubar = z / gamma
    support = np.flatnonzero(v @ ubar <= gamma + support_tol)
    spans = bool(np.linalg.matrix_rank(v[support], tol=rank_tol) == v.shape[1])
    return gamma, ubar, support, spans


@dataclass
class FlowTrajectory:
    records: list[dict]
    final: LinearMpnn
    balance0: list[np.ndarray]
    accepted: int
    halvings: int
    time: float
    loss: str

    @property
    def risks(self) -> np.ndarray:
        return np.array([r["risk"] for r in self.records])

    def drift_at(self, t: float) -> float:
        """Balancedness drift at the first record with time >= ``t``."""
        for r in self.records:
            if r["time"] >= t - 1e-12:
                return r["drift"]
        raise ValueError(f"trajectory ends before time {t}")

    def rows(self) -> list[dict]:
        out = []
        for r in self.records:
            row = {"step": r["step"], "time": r["time"], "risk": r["risk"]}
            for j, nrm in enumerate(r["norms"]):
                row[f"norm_{j + 1}"] = nrm
            for j, res in enumerate(r["residuals"]):
                row[f"residual_{j + 1}"] = res
            row["product_alignment"] = r["product_alignment"]
            row["ubar_alignment"] = r["ubar_alignment"]
            row["drift"] = r["drift"]
            out.append(row)
        return out


def check_initialization(m: LinearMpnn, samples, loss: str) -> None:
    risk, grads = risk_and_gradient(m, samples, loss)
    if all(not np.any(g) for g in grads):
        raise ValueError("initial gradient vanishes")
    if risk == loss_at_zero(loss):
        raise ValueError("initial risk equals the loss at zero")


def random_init(dims: Sequence[int], samples, rng: np.random.Generator, loss: str = "exponential",
                scale: float = 0.1, tries: int = 1000) -> LinearMpnn:
    """Uniform ``[-scale, scale]`` entries; layer ``j`` is ``dims[j+1] x dims[j]``."""
    if dims[-1] != 1:
        raise ValueError("the output dimension must be 1")
    for _ in range(tries):
        m = LinearMpnn([rng.uniform(-scale, scale, size=(dims[j + 1], dims[j])) for j in range(len(dims) - 1)])
        try:
            check_initialization(m, samples, loss)
            return m
        except ValueError:
            continue
    raise RuntimeError("no admissible initialization found")


def _record(step, time, risk, m, b0, ubar):
    met = alignment_metrics(m, ubar)
    drift = max((float(np.linalg.norm(b - c)) for b, c in zip(balancedness(m), b0)), default=0.0)
    return {"step": step, "time": time, "risk": risk, "norms": met["norms"], "residuals": met["residuals"],
            "product_alignment": met["product_alignment"], "ubar_alignment": met["ubar_alignment"],
            "drift": drift}


def flow(samples, init: LinearMpnn, eta: float, steps: int, loss: str = "exponential", *,
         stride: int = 1000, normalized: bool = False, ubar: np.ndarray | None = None,
         accept_tol: float = 1e-12, max_halvings: int = 20, check_init: bool = True) -> FlowTrajectory:
    """Explicit Euler on the risk with step halving whenever the risk would rise.

    ``normalized`` divides each step by the gradient norm.  A record (risk,
    norms, residuals, alignment, balancedness drift) is kept every ``stride``
    accepted steps plus at both ends.
    """
    if eta < 0:
        raise ValueError("step size must be non-negative")
    v = _stack(samples)
    if check_init:
        check_initialization(init, v, loss)
    m = init.copy()
    b0 = balancedness(m)
    risk, grads = risk_and_gradient(m, v, loss)
    t = 0.0
    records = [_record(0, t, risk, m, b0, ubar)]
    halvings = 0
    for step in range(1, steps + 1):
        h = eta
        if normalized:
            gn = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
            h = eta / gn if gn > 0 else 0.0
        for attempt in range(max_halvings + 1):
            trial = LinearMpnn([w - h * g for w, g in zip(m.weights, grads)])
            new_risk, new_grads = risk_and_gradient(trial, v, loss)
            if new_risk <= risk + accept_tol:
                break
            h *= 0.5
            halvings += 1
        else:
            raise FlowDivergence(f"risk increased after {max_halvings} halvings at step {step}")
        m, risk, grads = trial, new_risk, new_grads
        t += h
        if step % stride == 0 or step == steps:
            records.append(_record(step, t, risk, m, b0, ubar))
    return FlowTrajectory(records, m, b0, steps, halvings, t, loss)


def toy_separable(depth: int = 2, scale: float = 1.0):
    """Two labeled graphs in two dimensions whose signed vectors are ``scale*(1, +-0.4)``.

    A single edge (label +1) and a three-vertex path (label -1); both are
    support vectors of the max-margin direction ``(1, 0)``.
    """
    p2 = Graph(2, ((0, 1),))
    p3 = Graph(3, ((0, 1), (1, 2)))
    target = [np.array([1.0, 0.4]) * scale, np.array([1.0, -0.4]) * scale]
    out = []
    for g, y, vt in ((p2, 1, target[0]), (p3, -1, target[1])):
        walk = np.linalg.matrix_power(augmented_adjacency(g), depth) @ np.ones(g.n)
        x = np.outer(y * vt / walk.sum(), np.ones(g.n))
        out.append(FlowSample(g, x, y, depth))
    return out
