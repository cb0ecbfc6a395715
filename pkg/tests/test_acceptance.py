"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]`` or ``[FAIL]`` line (visible without ``-s``)
and then asserts the criterion at its stated tolerance.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import random_graph
from oracles import margin_grid_oracle
from wlmargin.flow import (
    alignment_metrics, finite_difference_check, flow, max_margin_reference, random_init, toy_separable,
)
from wlmargin.generators import construction, er_dataset
from wlmargin.io import load_tudataset
from wlmargin.kernels import feature_matrix, k_wloa, wloa_feature, wloa_feature_matrix
from wlmargin.margin import hard_margin
from wlmargin.refinement import refine_wl, refine_wlf
from wlmargin.subgraphs import PatternSet, clique, cycle
from wlmargin.svm import PAPER_C_GRID, FeaturizerConfig, cross_validate
from wlmargin.theory import (
    RefinementViolation, color_split_map, margin_growth_condition, wloa_distance_preserved, wloa_distances,
)

DATA = Path(__file__).resolve().parents[1] / "data"
FAMILY = [cycle(3), cycle(4), cycle(5), cycle(6), clique(4), clique(5)]


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"
    return emit


def _random_pair(rng, n_max, same_order=True):
    n = int(rng.integers(1, n_max + 1))
    m = n if same_order else int(rng.integers(1, n_max + 1))
    return random_graph(rng, n, rng.uniform(0.1, 0.7)), random_graph(rng, m, rng.uniform(0.1, 0.7))


def _random_family(rng, k_max=3):
    k = int(rng.integers(1, k_max + 1))
    return PatternSet([FAMILY[i] for i in rng.choice(len(FAMILY), size=k, replace=False)])


def test_separator_pair_distances(report):
    start = time.perf_counter()
    worst_wl, worst_f = 0.0, 0.0
    for n in (6, 16, 32, 64, 128):
        graphs, f, _ = construction("separator_pair", n)
        tw, tf = refine_wl(graphs, 5), refine_wlf(graphs, [f], 5)
        for T in range(6):
            xw, _ = feature_matrix(tw, T, normalized=True)
            xf, _ = feature_matrix(tf, T, normalized=True)
            worst_wl = max(worst_wl, float(np.linalg.norm((xw[0] - xw[1]).toarray())))
            worst_f = max(worst_f, abs(float(np.linalg.norm((xf[0] - xf[1]).toarray())) - math.sqrt(2)))
    elapsed = time.perf_counter() - start
    ok = worst_wl == 0.0 and worst_f <= 1e-9 and elapsed < 1.0
    report("separator pair distances", ok,
           f"max WL distance {worst_wl:g}, max |WL_F distance - sqrt2| {worst_f:.2e}, {elapsed:.2f}s")


def test_separability_table(report):
    start = time.perf_counter()
    lines, ok = [], True
    for n in (16, 32):
        graphs, f, y = construction("separability_set", n, m=200)
        pats = PatternSet([f])
        for kernel, p in (("wl", PatternSet()), ("wl", pats), ("wloa", pats)):
            rep = cross_validate(graphs, y, FeaturizerConfig(kernel, p), C_grid=(1e10,), repetitions=1,
                                 min_class_size=1, name=f"separability-{n}")
            if not p:
                good = 35.0 <= rep.test_mean <= 60.0 and rep.margin == "NLS"
            else:
                good = rep.test_mean == 100.0 and isinstance(rep.margin, float) and rep.margin > 0
            ok &= good
            m = rep.margin if isinstance(rep.margin, str) else f"{rep.margin:.4g}"
            lines.append(f"n={n} {rep.kernel} {rep.test_mean:.1f}% margin {m}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    report("separability table", ok, "; ".join(lines) + f"; {elapsed:.0f}s")


def test_er_reproduction(report):
    start = time.perf_counter()
    lines, ok = [], True
    for f, p, wl_max in ((cycle(3), 0.1, 60.0), (clique(4), 0.2, 85.0)):
        ds = er_dataset(200, 20, p, f, seed=0)
        acc = {}
        for pats in (PatternSet(), PatternSet([f])):
            rep = cross_validate(ds.graphs, ds.targets, FeaturizerConfig("wl", pats), C_grid=(1e10,),
                                 repetitions=1, min_class_size=1, with_margin=False)
            acc[bool(pats)] = rep.test_mean
        good = acc[True] >= 95.0 and acc[False] <= wl_max
        ok &= good
        name = PatternSet([f]).describe()
        lines.append(f"{name} p={p}: WL {acc[False]:.1f}% (<= {wl_max:g}), WL_F {acc[True]:.1f}% (>= 95)"
                     f" {'ok' if good else 'MISS'}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    report("ER reproduction", ok, "; ".join(lines) + f"; {elapsed:.0f}s")


def test_wloa_identities(report):
    rng = np.random.default_rng(20)
    bad = 0
    for _ in range(500):
        g, h = _random_pair(rng, 20)
        T = int(rng.integers(0, 5))
        tr = refine_wl([g, h], T)
        fg, fh = wloa_feature(tr, 0, T), wloa_feature(tr, 1, T)
        k = k_wloa(tr, 0, 1, T)
        inner = len(fg.entries.keys() & fh.entries.keys())
        sq = len(fg.entries.keys() ^ fh.entries.keys())
        bad += inner != k or sq != 2 * (T + 1) * g.n - 2 * k
    report("WLOA identities", bad == 0, f"{bad} violations in 500 pairs")


def test_refinement_and_distance_monotonicity(report):
    rng = np.random.default_rng(31)
    refine_bad = dist_bad = 0
    for _ in range(500):
        g, h = _random_pair(rng, 12)
        fs = _random_family(rng)
        T = int(rng.integers(0, 5))
        try:
            color_split_map(refine_wl([g, h], T), refine_wlf([g, h], fs, T), T)
        except RefinementViolation:
            refine_bad += 1
        plain, with_f = wloa_distances(g, h, fs, T)
        dist_bad += with_f < plain
    report("pattern refinement and WLOA distance growth", refine_bad == dist_bad == 0,
           f"{refine_bad} refinement and {dist_bad} distance violations in 500 instances")


def test_distance_equality_condition(report):
    rng = np.random.default_rng(42)
    bad = 0
    for _ in range(300):
        g, h = _random_pair(rng, 12)
        fs = _random_family(rng, 2)
        T = int(rng.integers(0, 4))
        ok, _ = wloa_distance_preserved(g, h, fs, T)
        plain, with_f = wloa_distances(g, h, fs, T)
        bad += ok != (with_f == plain) or (not ok) != (with_f > plain)
    (a, b), f, _ = construction("circulant8")
    ok8, witness = wloa_distance_preserved(a, b, [f], 2)
    witness_ok = not ok8 and witness is not None and witness[0] == 0
    report("split condition equivalence", bad == 0 and witness_ok,
           f"{bad} violations in 300 pairs; circulant-8 witness {witness}")


def test_margin_growth(report):
    rng = np.random.default_rng(7)
    checked = bad = 0
    attempts = 0
    while checked < 100 and attempts < 10000:
        attempts += 1
        m, d = int(rng.integers(4, 11)), int(rng.integers(1, 4))
        y = np.array([0, 1] * (m // 2))
        before = rng.normal(size=(len(y), d))
        before[y == 1, 0] += rng.uniform(1.0, 4.0)
        extra = (y[:, None] == 1) * rng.uniform(0.5, 2.0, size=(1, int(rng.integers(1, 3))))
        after = np.hstack([before, extra + rng.normal(scale=0.05, size=extra.shape)])
        holds, _, _ = margin_growth_condition(before, after, y)
        if not holds:
            continue
        checked += 1
        mb, ma = hard_margin(before, y), hard_margin(after, y)
        bad += not (ma.separable and ma.lam > (mb.lam if mb.separable else 0.0))
    (a, b), f, y8 = construction("circulant8")
    before, _ = wloa_feature_matrix(refine_wl([a, b], 1), 1)
    after, _ = wloa_feature_matrix(refine_wlf([a, b], [f], 1), 1)
    m0, m1 = hard_margin(before, y8), hard_margin(after, y8)
    lam0 = m0.lam if m0.separable else 0.0
    ok = checked == 100 and bad == 0 and m1.separable and m1.lam > lam0
    report("margin growth", ok,
           f"{bad} violations in {checked} datasets; circulant-8 WLOA margin {lam0:.6g} -> WLOA_F {m1.lam:.6g}")


def test_margin_oracle_and_concatenation(report):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 4))
        npos, nneg = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        x = rng.uniform(-1, 1, size=(npos + nneg, d))
        if rng.random() < 0.5:
            x[:npos, 0] += rng.uniform(0.2, 1.5)
        y = np.array([1] * npos + [0] * nneg)
        worst = max(worst, abs(hard_margin(x, y).lam - margin_grid_oracle(x, y)))
    slack = 0.0
    for _ in range(50):
        m = int(rng.integers(4, 13))
        y = np.array([1, 0] * (m // 2))
        x1 = rng.normal(size=(len(y), int(rng.integers(1, 5))))
        x2 = rng.normal(size=(len(y), int(rng.integers(1, 5))))
        x1[y == 1, 0] += 6
        x2[y == 1, 0] += 6
        a, b, c = hard_margin(x1, y), hard_margin(x2, y), hard_margin(np.hstack([x1, x2]), y)
        assert a.separable and b.separable
        slack = max(slack, math.hypot(a.lam, b.lam) - c.lam, c.radius - math.hypot(a.radius, b.radius))
    ok = worst < 2e-3 and slack <= 1e-6
    report("margin oracle and concatenation", ok,
           f"max |lambda - grid| {worst:.2e}; max concatenation shortfall {slack:.2e}")


def test_gradient_flow(report):
    start = time.perf_counter()
    samples = toy_separable()
    gamma, ubar, _, _ = max_margin_reference(samples)
    init = random_init([2, 2, 1], samples, np.random.default_rng(0))
    traj = flow(samples, init, 1e-2, 200_000, stride=100, ubar=ubar)
    risks = traj.risks
    monotone = bool((np.diff(risks) <= 1e-12).all())
    slow = flow(samples, init, 1e-3, 55_000, stride=500)
    ratio = traj.drift_at(50.0) / slow.drift_at(50.0)
    met = alignment_metrics(traj.final, ubar)
    fd_rng = np.random.default_rng(1)
    fd = max(finite_difference_check(m, samples) for m in
             [init, traj.final] + [random_init([2, 2, 1], samples, fd_rng) for _ in range(5)])
    elapsed = time.perf_counter() - start
    ok = (risks[-1] < 1e-3 and monotone and 5 <= ratio <= 20 and max(met["residuals"]) < 0.05
          and abs(met["ubar_alignment"]) > 0.99 and fd < 1e-5 and elapsed < 120)
    report("gradient flow", ok,
           f"risk {risks[-1]:.2e} monotone={monotone} drift ratio {ratio:.2f} "
           f"residuals {max(met['residuals']):.2e} alignment {met['ubar_alignment']:.5f} "
           f"fd {fd:.1e} gamma {gamma:g} {elapsed:.0f}s")


def test_tudataset_loader(report):
    mutag = load_tudataset(DATA, "MUTAG")
    mutag_ok = len(mutag.graphs) == 188 and len(mutag.classes) == 2 and abs(mutag.mean_order() - 17.9) <= 0.1
    if (DATA / "PROTEINS").is_dir():
        proteins = len(load_tudataset(DATA, "PROTEINS").graphs)
    else:
        proteins = None
    rep = cross_validate(mutag.graphs, mutag.targets, FeaturizerConfig("wl"), C_grid=PAPER_C_GRID,
                         repetitions=1, with_margin=False)
    ok = mutag_ok and proteins == 1113 and rep.test_mean >= 75.0
    report("TUDataset loader", ok,
           f"MUTAG {len(mutag.graphs)} graphs, {len(mutag.classes)} classes, mean order {mutag.mean_order():.2f}; "
           f"PROTEINS {'missing' if proteins is None else proteins} graphs; MUTAG WL test {rep.test_mean:.1f}%")
