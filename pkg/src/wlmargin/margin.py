"""Hull distances, hard-margin hyperplanes and (r, lambda) separability.

The distance between the two class hulls is the norm of the minimum-norm
point of their Minkowski difference.  We never form that difference: Frank-Wolfe
with away steps runs on the product of the two simplices, keeping the two
hull points explicitly (for accurate norms) and their inner products with
every input point (for cheap linear minimization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numba import njit

__all__ = [
    "MarginResult",
    "MarginConvergenceError",
    "SEPARABILITY_TOL",
    "min_norm_point",
    "hard_margin",
    "separability_report",
    "enclosing_ball_radius",
    "as_dense",
]

SEPARABILITY_TOL = 1e-9
GAP_TOL = 1e-12
MAX_ITER = 1_000_000

_CONVERGED, _INTERSECT, _CAPPED = 0, 1, 2


class MarginConvergenceError(RuntimeError):
    def __init__(self, msg, best, gap):
        super().__init__(msg)
        self.best = best
        self.gap = gap


@njit(cache=True)
def _fw_two_hulls(X, K, npos, tol, zero_tol, max_iter, refresh):
    m, dim = X.shape
    coef = np.zeros(m)
    best = np.inf
    i0, j0 = 0, npos
    for i in range(npos):
        for j in range(npos, m):
            d = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if d < best:
                best, i0, j0 = d, i, j
    coef[i0] = 1.0
    coef[j0] = 1.0
    zp = X[i0].copy()
    zq = X[j0].copy()
    u = K[:, i0].copy()  # <x_k, zp>
    w = K[:, j0].copy()  # <x_k, zq>
    gap = np.inf
    status = _CAPPED
    it = 0
    while it < max_iter:
        if it > 0 and it % refresh == 0:
            u = X @ zp
            w = X @ zq
        z = zp - zq
        zz = np.dot(z, z)
        if zz <= zero_tol * zero_tol:
            status = _INTERSECT
            gap = 0.0
            break
        zzp = np.dot(z, zp)
        zzq = np.dot(z, zq)
        # positive block: minimize <x_i, z>
        s, a = -1, -1
        smin, amax = np.inf, -np.inf
        for i in range(npos):
            g = u[i] - w[i]
            if g < smin:
                smin, s = g, i
            if coef[i] > 0.0 and g > amax:
                amax, a = g, i
        # negative block: maximize <x_j, z>
        t, b = -1, -1
        tmax, bmin = -np.inf, np.inf
        for j in range(npos, m):
            g = u[j] - w[j]
            if g > tmax:
                tmax, t = g, j
            if coef[j] > 0.0 and g < bmin:
                bmin, b = g, j
        fw_p = zzp - smin
        fw_q = tmax - zzq
        gap = fw_p + fw_q
        if gap <= tol * zz:
            status = _CONVERGED
            break
        aw_p = amax - zzp
        aw_q = zzq - bmin
        away_p = aw_p > fw_p and coef[a] < 1.0
        away_q = aw_q > fw_q and coef[b] < 1.0
        if away_p:
            dp = zp - X[a]
            gmax_p = coef[a] / (1.0 - coef[a])
        else:
            dp = X[s] - zp
            gmax_p = 1.0
        if away_q:
            dq = zq - X[b]
            gmax_q = coef[b] / (1.0 - coef[b])
        else:
            dq = X[t] - zq
            gmax_q = 1.0
        d = dp - dq
        dd = np.dot(d, d)
        if dd <= 0.0:
            status = _CONVERGED
            break
        gmax = min(gmax_p, gmax_q)
        gamma = -np.dot(z, d) / dd
        if gamma > gmax:
            gamma = gmax
        if gamma <= 0.0:
            # no descent along the combined direction; fall back to plain FW
            dp = X[s] - zp
            dq = X[t] - zq
            d = dp - dq
            dd = np.dot(d, d)
            away_p = False
            away_q = False
            gamma = min(1.0, max(0.0, -np.dot(z, d) / dd)) if dd > 0 else 0.0
            if gamma <= 0.0:
                status = _CONVERGED
                break
        if away_p:
            drop = gamma >= gmax_p
            for i in range(npos):
                coef[i] *= 1.0 + gamma
            coef[a] -= gamma
            if drop:
                coef[a] = 0.0
            u += gamma * (u - K[:, a])
        else:
            for i in range(npos):
                coef[i] *= 1.0 - gamma
            coef[s] += gamma
            u += gamma * (K[:, s] - u)
        if away_q:
            drop = gamma >= gmax_q
            for j in range(npos, m):
                coef[j] *= 1.0 + gamma
            coef[b] -= gamma
            if drop:
                coef[b] = 0.0
            w += gamma * (w - K[:, b])
        else:
            for j in range(npos, m):
                coef[j] *= 1.0 - gamma
            coef[t] += gamma
            w += gamma * (K[:, t] - w)
        zp += gamma * dp
        zq += gamma * dq
        it += 1
    # rebuild the hull points from the weights to shed accumulated drift
    sp_ = coef[:npos].sum()
    sq_ = coef[npos:].sum()
    for i in range(npos):
        coef[i] /= sp_
    for j in range(npos, m):
        coef[j] /= sq_
    zp = coef[:npos] @ X[:npos]
    zq = coef[npos:] @ X[npos:]
    return coef, zp, zq, gap, it, status


def as_dense(points) -> np.ndarray:
    if sp.issparse(points):
        return np.ascontiguousarray(points.toarray(), dtype=np.float64)
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("points must form a 2-D array")
    return np.ascontiguousarray(x)


def _solve(pos: np.ndarray, neg: np.ndarray, tol, zero_tol, max_iter):
    X = np.ascontiguousarray(np.vstack([pos, neg]))
    K = X @ X.T
    coef, zp, zq, gap, it, status = _fw_two_hulls(X, K, len(pos), tol, zero_tol, max_iter, 500)
    if status == _CAPPED:
        raise MarginConvergenceError(
            f"Frank-Wolfe hit {max_iter} iterations with gap {gap:.3e}", (coef, zp, zq), gap)
    return coef[: len(pos)], coef[len(pos):], zp, zq, gap, it, status


def min_norm_point(points, tol: float = GAP_TOL, max_iter: int = MAX_ITER):
    """Minimum-norm point of the convex hull of the rows of ``points``.

    Returns ``(point, weights)``.
    """
    x = as_dense(points)
    if len(x) == 0:
        raise ValueError("need at least one point")
    origin = np.zeros((1, x.shape[1]))
    # a hull through the origin is reported once its nearest point is numerically zero
    zero_tol = 1e-13 * max(1.0, float(np.abs(x).max()))
    alpha, _, zp, _, _, _, _ = _solve(x, origin, tol, zero_tol, max_iter)
    return zp, alpha


def enclosing_ball_radius(points, iters: int = 100000, tol: float = 1e-13) -> float:
    """Radius of the minimum enclosing ball (away-step Frank-Wolfe on its dual)."""
    x = as_dense(points)
    k = x @ x.T
    diag = np.diag(k).copy()
    scale = max(1.0, float(diag.max()))
    mu = np.zeros(len(x))
    mu[int(np.argmax(diag))] = 1.0
    kmu = k @ mu
    for _ in range(iters):
        # maximize diag.mu - mu.K.mu; grad = diag - 2 K mu
        grad = diag - 2.0 * kmu
        here = mu @ grad
        i = int(np.argmax(grad))
        support = np.flatnonzero(mu > 0)
        j = int(support[np.argmin(grad[support])])
        fw_gap, away_gap = grad[i] - here, here - grad[j]
        if fw_gap <= tol * scale:
            break
        d = -mu.copy()
        if fw_gap >= away_gap:
            d[i] += 1.0
            cap = 1.0
        else:
            d = mu.copy()
            d[j] -= 1.0
            cap = mu[j] / (1.0 - mu[j]) if mu[j] < 1.0 else 1.0
        kd = k @ d
        curv = d @ kd
        slope = grad @ d
        step = cap if curv <= 0 else min(cap, max(0.0, slope / (2.0 * curv)))
        mu += step * d
        mu[mu < 1e-300] = 0.0
        kmu += step * kd
    val = diag @ mu - mu @ k @ mu
    return math.sqrt(max(val, 0.0))


@dataclass
class MarginResult:
    separable: bool
    lam: float
    radius: float
    ratio: float
    alpha: np.ndarray
    beta: np.ndarray
    w: np.ndarray | None
    b: float | None
    x_pos: np.ndarray
    x_neg: np.ndarray
    tol: float = SEPARABILITY_TOL
    gap: float = 0.0
    iterations: int = 0
    radius_meb: float | None = None
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "separable": self.separable,
            "lambda": self.lam,
            "radius": self.radius,
            "ratio": self.ratio,
            "radius_meb": self.radius_meb,
            "gap": self.gap,
            "iterations": self.iterations,
        }


def hard_margin(points, labels, *, meb: bool = False, tol: float = GAP_TOL,
                max_iter: int = MAX_ITER) -> MarginResult:
    """Hard-margin analysis of labeled points (labels in {0, 1}, class 1 positive)."""
    x = as_dense(points)
    y = np.asarray(labels)
    if len(y) != len(x):
        raise ValueError("points and labels differ in length")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    pos_idx = np.flatnonzero(y == 1)
    neg_idx = np.flatnonzero(y == 0)
    if len(pos_idx) == 0 or len(neg_idx) == 0:
        raise ValueError("both classes must be present")
    alpha, beta, xp, xn, gap, it, status = _solve(x[pos_idx], x[neg_idx], tol, 2 * SEPARABILITY_TOL, max_iter)
    diff = xp - xn
    lam = float(np.linalg.norm(diff)) / 2.0
    radius = float(np.sqrt((x * x).sum(axis=1).max()))
    separable = lam > SEPARABILITY_TOL
    if separable:
        w = diff / lam**2
        b = float((xn @ xn - xp @ xp) / (2.0 * lam**2))
        ratio = radius**2 / lam**2
    else:
        w, b, ratio, lam = None, None, math.inf, 0.0
    return MarginResult(
        separable=separable, lam=lam, radius=radius, ratio=ratio, alpha=alpha, beta=beta,
        w=w, b=b, x_pos=xp, x_neg=xn, gap=float(gap), iterations=int(it),
        radius_meb=enclosing_ball_radius(x) if meb else None,
    )


def separability_report(points, labels, r_override: float | None = None, **kw) -> MarginResult:
    """``hard_margin`` plus the capacity ratio r^2 / lambda^2 (optionally with a given radius)."""
    res = hard_margin(points, labels, **kw)
    if r_override is not None:
        res.radius = float(r_override)
    res.ratio = res.radius**2 / res.lam**2 if res.separable else math.inf
    return res
