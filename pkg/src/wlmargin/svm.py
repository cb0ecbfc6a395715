"""Soft-margin SVMs and the repeated stratified cross-validation harness.

``train_linear`` solves the hinge-loss dual by coordinate descent on CSR
rows; the bias is an extra constant feature (``bias_scale``) and is therefore
regularized.  ``train_kernel`` is SMO on a precomputed Gram matrix with the
usual unregularized bias.  Multiclass targets use one-vs-rest.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit

from .graph import Graph
from .kernels import build_trace, cosine_normalize, feature_matrix, wloa_feature_matrix, wloa_gram_matrix
from .margin import hard_margin
from .subgraphs import PatternSet

__all__ = [
    "ConvergenceError",
    "LinearModel",
    "KernelModel",
    "OneVsRest",
    "train_linear",
    "train_kernel",
    "fit_one_vs_rest",
    "FeaturizerConfig",
    "CVReport",
    "cross_validate",
    "stratified_folds",
    "PAPER_C_GRID",
]

PAPER_C_GRID = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)


class ConvergenceError(RuntimeError):
    """Solver hit its iteration cap; ``model`` holds the final iterate."""

    def __init__(self, msg, model, violation):
        super().__init__(msg)
        self.model = model
        self.violation = violation


def _signed(labels) -> np.ndarray:
    y = np.asarray(labels)
    vals = set(np.unique(y).tolist())
    if vals <= {0, 1}:
        y = np.where(y == 1, 1.0, -1.0)
    elif vals <= {-1, 1}:
        y = y.astype(np.float64)
    else:
        raise ValueError("binary labels must be {0,1} or {-1,+1}")
    if len(np.unique(y)) < 2:
        raise ValueError("both classes must be present")
    return y


@dataclass
class LinearModel:
    w: np.ndarray
    b: float
    C: float
    converged: bool = True
    epochs: int = 0

    def decision(self, x) -> np.ndarray:
        return np.asarray(x @ self.w).ravel() + self.b

    def predict(self, x) -> np.ndarray:
        return (self.decision(x) > 0).astype(int)


@dataclass
class KernelModel:
    coef: np.ndarray  # alpha_i * y_i over training indices
    b: float
    support: np.ndarray
    C: float
    alpha: np.ndarray
    converged: bool = True
    iterations: int = 0

    def decision(self, k_test_train: np.ndarray) -> np.ndarray:
        return k_test_train[:, self.support] @ self.coef[self.support] + self.b

    def predict(self, k_test_train: np.ndarray) -> np.ndarray:
        return (self.decision(k_test_train) > 0).astype(int)


@njit(cache=True)
def _dcd(indptr, indices, data, y, C, bias2, max_epochs, tol, seed):
    m = y.shape[0]
    dim = 0
    for k in range(indices.shape[0]):
        if indices[k] + 1 > dim:
            dim = indices[k] + 1
    w = np.zeros(dim)
    wb = 0.0  # weight on the constant feature, stored pre-scaled (= w_bias * bias_scale)
    alpha = np.zeros(m)
    qii = np.empty(m)
    for i in range(m):
        s = bias2
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * data[k]
        qii[i] = s
    np.random.seed(seed)
    order = np.arange(m)
    viol = np.inf
    epoch = 0
    while epoch < max_epochs:
        np.random.shuffle(order)
        viol = 0.0
        for r in range(m):
            i = order[r]
            if qii[i] <= 0.0:
                continue
            f = wb
            for k in range(indptr[i], indptr[i + 1]):
                f += w[indices[k]] * data[k]
            g = y[i] * f - 1.0
            if alpha[i] <= 0.0:
                pg = min(g, 0.0)
            elif alpha[i] >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > viol:
                viol = abs(pg)
            if pg != 0.0:
                old = alpha[i]
                new = min(max(old - g / qii[i], 0.0), C)
                delta = (new - old) * y[i]
                alpha[i] = new
                for k in range(indptr[i], indptr[i + 1]):
                    w[indices[k]] += delta * data[k]
                wb += delta * bias2
        epoch += 1
        if viol < tol:
            break
    return w, wb, alpha, viol, epoch


def train_linear(x, labels, C: float, *, bias: str = "free", bias_scale: float = 1.0, tol: float = 1e-6,
                 max_epochs: int = 5000, seed: int = 0) -> LinearModel:
    """Hinge-loss linear SVM, ``min 1/2 |w|^2 + C sum hinge``, solved in the dual.

    ``bias="free"`` leaves ``b`` unpenalized; the equality constraint this puts
    on the dual is handled by pairwise coordinate steps on the linear Gram
    matrix (budget: ``max_epochs`` passes worth of pair updates).
    ``bias="regularized"`` appends a constant ``bias_scale`` feature and runs
    single-coordinate descent with random sweeps, which scales to large sparse
    inputs but also penalizes ``b``.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    y = _signed(labels)
    x = sp.csr_matrix(x, dtype=np.float64)
    if x.shape[0] != len(y):
        raise ValueError("features and labels differ in length")
    if bias == "free":
        k = np.ascontiguousarray((x @ x.T).toarray())
        alpha, b, viol, it = _smo(k, y, float(C), tol, max_epochs * len(y))
        w = np.asarray(x.T @ (alpha * y)).ravel()
        model = LinearModel(w, float(b), float(C), viol < tol, int(it) // len(y))
    elif bias == "regularized":
        x.sort_indices()
        w, wb, _, viol, epochs = _dcd(x.indptr.astype(np.int64), x.indices.astype(np.int64), x.data,
                                      y, float(C), float(bias_scale) ** 2, max_epochs, tol, seed)
        full = np.zeros(x.shape[1])
        full[: len(w)] = w
        model = LinearModel(full, float(wb), float(C), viol < tol, int(epochs))
    else:
        raise ValueError(f"unknown bias mode {bias!r}")
    if viol >= tol:
        raise ConvergenceError(f"linear SVM stopped after {model.epochs} epochs, violation {viol:.3e}",
                               model, viol)
    return model


@njit(cache=True)
def _select(y, alpha, grad, C):
    m = y.shape[0]
    i, j = -1, -1
    gmax, gmin = -np.inf, np.inf
    for t in range(m):
        v = -y[t] * grad[t]
        if y[t] > 0:
            up, low = alpha[t] < C, alpha[t] > 0.0
        else:
            up, low = alpha[t] > 0.0, alpha[t] < C
        if up and v > gmax:
            gmax, i = v, t
        if low and v < gmin:
            gmin, j = v, t
    return i, j, gmax, gmin


@njit(cache=True)
def _smo(K, y, C, tol, max_iter):
    # K is symmetric, so rows are read instead of columns
    m = y.shape[0]
    alpha = np.zeros(m)
    grad = -np.ones(m)
    it = 0
    i, j, gmax, gmin = _select(y, alpha, grad, C)
    gap = gmax - gmin
    while it < max_iter:
        if i < 0 or j < 0 or gap < tol:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 1e-12:
            eta = 1e-12
        delta = gap / eta
        # alpha_i += y_i * delta, alpha_j -= y_j * delta, both kept in [0, C]
        if y[i] > 0:
            delta = min(delta, C - alpha[i])
        else:
            delta = min(delta, alpha[i])
        if y[j] > 0:
            delta = min(delta, alpha[j])
        else:
            delta = min(delta, C - alpha[j])
        ci = delta  # y_i * y_i * delta
        cj = -delta
        alpha[i] += y[i] * delta
        alpha[j] -= y[j] * delta
        ki = K[i]
        kj = K[j]
        # gradient update fused with the next working-set selection
        ni, nj = -1, -1
        gmax, gmin = -np.inf, np.inf
        for t in range(m):
            grad[t] += y[t] * (ci * ki[t] + cj * kj[t])
            v = -y[t] * grad[t]
            if y[t] > 0:
                up, low = alpha[t] < C, alpha[t] > 0.0
            else:
                up, low = alpha[t] > 0.0, alpha[t] < C
            if up and v > gmax:
                gmax, ni = v, t
            if low and v < gmin:
                gmin, nj = v, t
        i, j = ni, nj
        gap = gmax - gmin
        it += 1
    # bias from free vectors, else the middle of the feasible interval
    total, count = 0.0, 0
    for t in range(m):
        if 0.0 < alpha[t] < C:
            total += -y[t] * grad[t]
            count += 1
    if count > 0:
        b = total / count
    else:
        _, _, gmax, gmin = _select(y, alpha, grad, C)
        b = 0.5 * (gmax + gmin)
    return alpha, b, gap, it


def _check_psd(k: np.ndarray) -> None:
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError("Gram matrix must be square")
    if not np.allclose(k, k.T, atol=1e-10):
        raise ValueError("Gram matrix must be symmetric")
    scale = max(1.0, float(np.abs(np.diag(k)).max(initial=0.0)))
    lo = float(np.linalg.eigvalsh(k).min(initial=0.0))
    if lo < -1e-8 * scale:
        raise ValueError(f"Gram matrix is not positive semidefinite (eigenvalue {lo:.3e})")


def train_kernel(gram, labels, C: float, *, tol: float = 1e-5, max_iter: int | None = None,
                 check_psd: bool = True) -> KernelModel:
    """C-SVM on a precomputed Gram matrix via SMO with maximal violating pairs."""
    if C <= 0:
        raise ValueError("C must be positive")
    k = np.ascontiguousarray(getattr(gram, "values", gram), dtype=np.float64)
    y = _signed(labels)
    if k.shape[0] != len(y):
        raise ValueError("Gram matrix and labels differ in size")
    if check_psd:
        _check_psd(k)
    cap = max(100_000, 100 * len(y)) if max_iter is None else max_iter
    alpha, b, gap, it = _smo(k, y, float(C), tol, cap)
    support = np.flatnonzero(alpha > 0)
    model = KernelModel(alpha * y, float(b), support, float(C), alpha, gap < tol, int(it))
    if gap >= tol:
        raise ConvergenceError(f"SMO stopped after {it} iterations, violation {gap:.3e}", model, gap)
    return model


@dataclass
class OneVsRest:
    classes: tuple
    models: list
    converged: bool

    def decision(self, x) -> np.ndarray:
        return np.column_stack([m.decision(x) for m in self.models])

    def predict(self, x) -> np.ndarray:
        scores = self.decision(x)
        if len(self.classes) == 2:
            return np.where(scores[:, 0] > 0, self.classes[1], self.classes[0])
        return np.asarray(self.classes)[np.argmax(scores, axis=1)]


def _tolerant(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConvergenceError as err:
        return err.model


def fit_one_vs_rest(x, targets, C: float, solver: str = "linear", seed: int = 0) -> OneVsRest:
    """Binary targets train one model (last class positive); otherwise one per class.

    With ``solver="kernel"``, ``x`` is the training Gram matrix.  Models that
    hit their iteration cap are kept as they are.
    """
    t = np.asarray(targets)
    classes = tuple(sorted(set(t.tolist())))
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    positives = classes[1:] if len(classes) == 2 else classes
    models = []
    for c in positives:
        y = (t == c).astype(int)
        if solver == "linear":
            models.append(_tolerant(train_linear, x, y, C, seed=seed))
        elif solver == "kernel":
            models.append(_tolerant(train_kernel, x, y, C, check_psd=False))
        else:
            raise ValueError(f"unknown solver {solver!r}")
    return OneVsRest(classes, models, all(m.converged for m in models))


@dataclass(frozen=True)
class FeaturizerConfig:
    kernel: str = "wl"  # wl | wloa
    patterns: PatternSet = field(default_factory=PatternSet)
    solver: str = "kernel"  # kernel (Gram + SMO) | linear (coordinate descent on explicit features)

    def describe(self) -> str:
        return f"{self.kernel}{'_F' if self.patterns else ''}"


@dataclass
class CVReport:
    dataset: str
    kernel: str
    patterns: str
    folds: list
    repetitions: int
    test_mean: float
    test_std: float
    train_mean: float
    train_std: float
    margin: float | str
    nls_folds: int
    unconverged_fits: int
    multiclass: str = "one-vs-rest"

    def summary(self) -> str:
        m = self.margin if isinstance(self.margin, str) else f"{self.margin:.6g}"
        return (f"{self.dataset} {self.kernel} F={self.patterns}: test {self.test_mean:.2f} ± {self.test_std:.2f}"
                f"  train {self.train_mean:.2f} ± {self.train_std:.2f}  margin {m}")


def stratified_folds(targets, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per example; each class is shuffled and dealt round robin."""
    t = np.asarray(targets)
    out = np.empty(len(t), dtype=np.int64)
    offset = 0
    for c in sorted(set(t.tolist())):
        idx = np.flatnonzero(t == c)
        idx = idx[rng.permutation(len(idx))]
        out[idx] = (np.arange(len(idx)) + offset) % folds
        offset += len(idx)
    return out


def _split_validation(train_idx, targets, rng, share=0.1):
    t = np.asarray(targets)[train_idx]
    val = np.zeros(len(train_idx), dtype=bool)
    for c in sorted(set(t.tolist())):
        pos = np.flatnonzero(t == c)
        k = int(round(share * len(pos)))
        if len(pos) > 1:
            k = min(max(k, 1), len(pos) - 1)
        else:
            k = 0
        val[pos[rng.permutation(len(pos))[:k]]] = True
    return train_idx[~val], train_idx[val]


class _Features:
    """Per-T feature blocks for one collection (explicit features or Gram)."""

    def __init__(self, graphs, config: FeaturizerConfig, T_grid):
        self.config = config
        tmax = max(T_grid)
        trace = build_trace(graphs, config.patterns, tmax)
        self.explicit, self.gram = {}, {}
        for T in T_grid:
            if config.kernel == "wl":
                x, _ = feature_matrix(trace, T, normalized=True)
            elif config.kernel == "wloa":
                x, _ = wloa_feature_matrix(trace, T, normalized=True)
            else:
                raise ValueError(f"unknown kernel {config.kernel!r}")
            self.explicit[T] = x
            if config.solver == "kernel":
                if config.kernel == "wloa":
                    self.gram[T] = cosine_normalize(wloa_gram_matrix(trace, T).astype(np.float64))
                else:
                    self.gram[T] = (x @ x.T).toarray()

    def fit(self, T, idx, targets, C, seed):
        if self.config.solver == "kernel":
            k = self.gram[T][np.ix_(idx, idx)]
            return fit_one_vs_rest(k, targets[idx], C, "kernel")
        return fit_one_vs_rest(self.explicit[T][idx], targets[idx], C, "linear", seed)

    def accuracy(self, model, T, train_idx, idx, targets) -> float:
        if len(idx) == 0:
            return float("nan")
        if self.config.solver == "kernel":
            pred = model.predict(self.gram[T][np.ix_(idx, train_idx)])
        else:
            pred = model.predict(self.explicit[T][idx])
        return 100.0 * float(np.mean(pred == targets[idx]))

    def margin(self, T, idx, targets):
        x = self.explicit[T][idx]
        t = targets[idx]
        classes = sorted(set(t.tolist()))
        positives = classes[1:] if len(classes) == 2 else classes
        lam = math.inf
        for c in positives:
            res = hard_margin(x, (t == c).astype(int))
            if not res.separable:
                return 0.0, False
            lam = min(lam, res.lam)
        return lam, True


def _run_repetition(args):
    feats, targets, rep, seed, folds, C_grid, T_grid, with_margin = args
    rng = np.random.default_rng([seed, rep])
    fold_of = stratified_folds(targets, folds, rng)
    rows = []
    unconverged = 0
    for k in range(folds):
        train_idx = np.flatnonzero(fold_of != k)
        test_idx = np.flatnonzero(fold_of == k)
        fit_idx, val_idx = _split_validation(train_idx, targets, rng)
        best = None
        for T in T_grid:
            for C in C_grid:
                if len(val_idx) == 0 or len(set(targets[fit_idx].tolist())) < 2:
                    score = 0.0
                else:
                    model = feats.fit(T, fit_idx, targets, C, seed)
                    score = feats.accuracy(model, T, fit_idx, val_idx, targets)
                if best is None or score > best[0]:
                    best = (score, T, C)
        _, T, C = best
        model = feats.fit(T, train_idx, targets, C, seed)
        unconverged += not model.converged
        row = {
            "repetition": rep,
            "fold": k,
            "T": T,
            "C": C,
            "train_acc": feats.accuracy(model, T, train_idx, train_idx, targets),
            "test_acc": feats.accuracy(model, T, train_idx, test_idx, targets),
        }
        if with_margin:
            lam, ok = feats.margin(T, train_idx, targets)
            row["margin"] = lam
            row["separable"] = ok
        rows.append(row)
    return rows, unconverged


def cross_validate(graphs: Sequence[Graph], targets, config: FeaturizerConfig = FeaturizerConfig(),
                   C_grid=PAPER_C_GRID, T_grid=(1, 2, 3, 4, 5), repetitions: int = 10, seed: int = 0,
                   folds: int = 10, min_class_size: int = 10, with_margin: bool = True,
                   jobs: int = 1, name: str = "dataset") -> CVReport:
    """Repeated stratified k-fold CV with inner (T, C) selection on a 10% split.

    Accuracy std is taken over repetition means.  The reported margin is the
    mean hard margin of the selected features on each training fold, or
    ``"NLS"`` if any training fold is not linearly separable.
    """
    targets = np.asarray(targets)
    if len(targets) != len(graphs):
        raise ValueError("graphs and targets differ in length")
    if not C_grid or not T_grid or min(C_grid) <= 0 or min(T_grid) < 0:
        raise ValueError("invalid hyperparameter grid")
    _, counts = np.unique(targets, return_counts=True)
    if len(counts) < 2:
        raise ValueError("need at least two classes")
    if counts.min() < min_class_size:
        raise ValueError(f"smallest class has {counts.min()} examples; need {min_class_size}")
    feats = _Features(graphs, config, T_grid)
    tasks = [(feats, targets, r, seed, folds, tuple(C_grid), tuple(T_grid), with_margin)
             for r in range(repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_repetition, tasks))
    else:
        results = [_run_repetition(t) for t in tasks]
    rows = [r for rs, _ in results for r in rs]
    unconverged = sum(u for _, u in results)
    test_rep = [np.mean([r["test_acc"] for r in rs]) for rs, _ in results]
    train_rep = [np.mean([r["train_acc"] for r in rs]) for rs, _ in results]
    nls = sum(1 for r in rows if with_margin and not r["separable"])
    if not with_margin:
        margin: float | str = float("nan")
    elif nls:
        margin = "NLS"
    else:
        margin = float(np.mean([r["margin"] for r in rows]))
    return CVReport(
        dataset=name,
        kernel=config.describe(),
        patterns=config.patterns.describe(),
        folds=rows,
        repetitions=repetitions,
        test_mean=float(np.mean(test_rep)),
        test_std=float(np.std(test_rep)),
        train_mean=float(np.mean(train_rep)),
        train_std=float(np.std(train_rep)),
        margin=margin,
        nls_folds=nls,
        unconverged_fits=unconverged,
    )
