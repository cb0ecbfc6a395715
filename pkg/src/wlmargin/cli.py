"""Command line entry point: ``wlmargin <command> [options]``.

Exit status is 0 on success, 2 when inputs violate a precondition and 1 on
any other failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import generators, io, theory
from .flow import alignment_metrics, flow, max_margin_reference, random_init, toy_separable
from .graph import SizeCapError
from .kernels import build_trace, feature_matrix, gram, wloa_feature_matrix
from .margin import hard_margin
from .subgraphs import PatternSet, named_pattern
from .svm import PAPER_C_GRID, FeaturizerConfig, cross_validate


class PreconditionError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as err:
        raise PreconditionError(f"invalid grid {text!r}") from err
    if not vals:
        raise PreconditionError("empty grid")
    return vals


def _ints(text: str) -> tuple[int, ...]:
    vals = _floats(text)
    if any(v != int(v) or v < 0 for v in vals):
        raise PreconditionError(f"invalid iteration grid {text!r}")
    return tuple(int(v) for v in vals)


def parse_pattern_arg(spec: str | None, default: PatternSet) -> PatternSet:
    """Comma separated names (``c3``, ``k4``) or edge-list files; ``none`` gives plain WL."""
    if spec is None:
        return default
    pats = []
    for tok in (t.strip() for t in spec.split(",")):
        if not tok or tok.lower() == "none":
            continue
        if Path(tok).is_file():
            pats.append(io.read_edge_list(tok))
        else:
            pats.append(named_pattern(tok))
    return PatternSet(pats)


def _dataset(args):
    """Return ``(graphs, targets, default patterns, name)`` for the selected source."""
    if getattr(args, "tudataset", None):
        if not args.name:
            raise PreconditionError("--tudataset needs --name")
        b = io.load_tudataset(args.tudataset, args.name, with_node_labels=args.with_node_labels)
        return b.graphs, b.targets, PatternSet(), b.name
    kind = (args.construction or "").replace("-", "_")
    if not kind:
        raise PreconditionError("choose --construction or --tudataset")
    if kind == "er":
        target = named_pattern(args.target)
        ds = generators.er_dataset(args.count, args.n, args.p, target, args.seed,
                                   induced=args.count_mode == "induced")
        return list(ds.graphs), list(ds.targets), PatternSet([target]), f"er-{args.target}-{args.p:g}"
    if args.n is None and kind not in ("circulant8", "circulant8_pair"):
        raise PreconditionError("--n is required for this construction")
    graphs, f, targets = generators.construction(kind, args.n, m=args.count)
    return graphs, targets, PatternSet([f]), f"{kind}-{args.n}"


def _print(line: str = "") -> None:
    sys.stdout.write(line + "\n")


def cmd_generate(args) -> int:
    graphs, targets, pats, name = _dataset(args)
    _print(f"{name}: {len(graphs)} graphs, classes {sorted(set(targets))}, default patterns {pats.describe()}")
    if args.out:
        io.write_tudataset(args.out, name, graphs, targets)
        _print(f"wrote {args.out}")
    return 0


def cmd_kernel(args) -> int:
    graphs, _, _, name = _dataset(args)
    pats = parse_pattern_arg(args.patterns, PatternSet())
    g = gram(graphs, args.kernel, pats, args.T, normalized=not args.raw)
    vals = np.linalg.eigvalsh(g.values)
    _print(f"{name}: {g.kind} Gram {g.size}x{g.size}, T={g.T}, patterns={g.patterns}, "
           f"min eigenvalue {vals.min():.3e}")
    if args.out:
        io.export(g, "csv", args.out)
    return 0


def _features(graphs, kernel, pats, T, normalized=True):
    trace = build_trace(graphs, pats, T)
    if kernel == "wl":
        return feature_matrix(trace, T, normalized=normalized)[0]
    return wloa_feature_matrix(trace, T, normalized=normalized)[0]


def cmd_margin(args) -> int:
    graphs, targets, _, name = _dataset(args)
    pats = parse_pattern_arg(args.patterns, PatternSet())
    x = _features(graphs, args.kernel, pats, args.T, normalized=not args.raw)
    t = np.asarray(targets)
    classes = sorted(set(t.tolist()))
    if len(classes) < 2:
        raise PreconditionError("need two classes")
    positives = classes[1:] if len(classes) == 2 else classes
    results = []
    for c in positives:
        res = hard_margin(x, (t == c).astype(int), meb=args.meb)
        results.append(res)
        lam = f"{res.lam:.12g}" if res.separable else "NLS"
        _print(f"{name} class {c} vs rest: lambda={lam} radius={res.radius:.12g} ratio={res.ratio:.6g}"
               + (f" radius_meb={res.radius_meb:.12g}" if res.radius_meb is not None else ""))
    if args.out:
        io.export(results[0], "json", args.out)
    return 0


def cmd_check(args) -> int:
    kind = (args.construction or "").replace("-", "_")
    if not kind:
        raise PreconditionError("check needs --construction")
    graphs, f, targets = generators.construction(kind, args.n, m=args.count)
    pats = parse_pattern_arg(args.patterns, PatternSet([f]))
    _print(f"{kind} n={args.n} patterns={pats.describe()}")
    pair = len(graphs) == 2
    for T in range(args.T + 1):
        wl = _features(graphs, "wl", PatternSet(), T)
        wlf = _features(graphs, "wl", pats, T)
        if pair:
            d0 = float(np.linalg.norm((wl[0] - wl[1]).toarray()))
            d1 = float(np.linalg.norm((wlf[0] - wlf[1]).toarray()))
            _print(f"T={T} normalized WL distance={d0:.12g} WL_F distance={d1:.12g}")
    if pair and graphs[0].n == graphs[1].n:
        ok, witness = theory.wloa_distance_preserved(graphs[0], graphs[1], pats, args.T)
        d_wl, d_f = theory.wloa_distances(graphs[0], graphs[1], pats, args.T)
        _print(f"WLOA squared distance {d_wl} -> {d_f}; split condition holds: {ok}"
               + (f" (witness t={witness[0]} color={witness[1]} split color={witness[2]})" if witness else ""))
    if set(targets) == {0, 1}:
        _print(f"pattern condition (class 0 hit, class 1 clean): {theory.f_condition_holds(graphs, targets, pats)}")
        before = _features(graphs, "wloa", PatternSet(), args.T, normalized=False)
        after = _features(graphs, "wloa", pats, args.T, normalized=False)
        holds, dmin, dmax = theory.margin_growth_condition(before, after, targets)
        m0, m1 = hard_margin(before, targets), hard_margin(after, targets)
        _print(f"margin growth condition: {holds} (delta_min={dmin:.12g}, delta_max={dmax:.12g}); "
               f"WLOA margin {m0.lam:.12g} -> {m1.lam:.12g}")
    return 0


def cmd_cv(args) -> int:
    graphs, targets, _, name = _dataset(args)
    pats = parse_pattern_arg(args.patterns, PatternSet())
    # generated data (constructions and ER) uses a fixed large C; TUDatasets use the grid
    c_grid = _floats(args.C_grid) if args.C_grid else ((1e10,) if args.construction else PAPER_C_GRID)
    t_grid = _ints(args.T_grid)
    cfg = FeaturizerConfig(args.kernel, pats, args.solver)
    rep = cross_validate(graphs, targets, cfg, C_grid=c_grid, T_grid=t_grid, repetitions=args.repetitions,
                         seed=args.seed, folds=args.folds, min_class_size=args.min_class_size,
                         jobs=args.jobs, name=name)
    _print(rep.summary())
    if args.out:
        io.export(rep, "json" if str(args.out).endswith(".json") else "csv", args.out)
    return 0


def cmd_flow(args) -> int:
    if args.toy != "separable":
        raise PreconditionError(f"unknown toy problem {args.toy!r}")
    samples = toy_separable(depth=2, scale=args.scale)
    gamma, ubar, support, spans = max_margin_reference(samples)
    rng = np.random.default_rng(args.seed)
    init = random_init([2, 2, 1], samples, rng, args.loss)
    traj = flow(samples, init, args.eta, args.steps, args.loss, stride=args.stride,
                normalized=args.normalized_step, ubar=ubar)
    met = alignment_metrics(traj.final, ubar)
    last = traj.records[-1]
    _print(f"gamma={gamma:.12g} support={support.tolist()} spans={spans}")
    _print(f"final risk={last['risk']:.6e} time={traj.time:.6g} halvings={traj.halvings} drift={last['drift']:.3e}")
    _print("residuals=" + ",".join(f"{r:.6g}" for r in met["residuals"])
           + f" product_alignment={met['product_alignment']:.6g} ubar_alignment={met['ubar_alignment']:.6g}")
    if args.out:
        io.export(traj, "csv", args.out)
    return 0


def _add_source(p, er=True):
    p.add_argument("--construction", help="separator-pair, separability, shrink-pair, circulant8" + (", er" if er else ""))
    p.add_argument("--n", type=int, help="construction size or ER order")
    p.add_argument("--count", type=int, default=200, help="graphs for separability/er")
    p.add_argument("--p", type=float, default=0.1, help="ER edge probability")
    p.add_argument("--target", default="c3", help="ER counted pattern")
    p.add_argument("--count-mode", choices=("induced", "partial"), default="induced")
    p.add_argument("--tudataset", help="directory with TUDataset files")
    p.add_argument("--name", help="TUDataset name")
    p.add_argument("--with-node-labels", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wlmargin", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a dataset")
    _add_source(p)
    p.add_argument("--out", help="output directory (TUDataset layout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("kernel", help="Gram matrix as CSV")
    _add_source(p)
    p.add_argument("--kernel", choices=("wl", "wloa"), default="wl")
    p.add_argument("--patterns")
    p.add_argument("--T", type=int, default=3)
    p.add_argument("--raw", action="store_true", help="skip cosine normalization")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("margin", help="hard margin per class split")
    _add_source(p)
    p.add_argument("--kernel", choices=("wl", "wloa"), default="wl")
    p.add_argument("--patterns")
    p.add_argument("--T", type=int, default=3)
    p.add_argument("--raw", action="store_true", help="use count features instead of unit vectors")
    p.add_argument("--meb", action="store_true", help="also report the minimum enclosing ball radius")
    p.add_argument("--out")
    p.set_defaults(func=cmd_margin)

    p = sub.add_parser("check", help="distance and margin predicates on a construction")
    p.add_argument("--construction", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--patterns")
    p.add_argument("--T", type=int, default=5)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("cv", help="repeated cross-validation")
    _add_source(p)
    p.add_argument("--kernel", choices=("wl", "wloa"), default="wl")
    p.add_argument("--patterns")
    p.add_argument("--solver", choices=("kernel", "linear"), default="kernel")
    p.add_argument("--C-grid", dest="C_grid")
    p.add_argument("--T-grid", dest="T_grid", default="1,2,3,4,5")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--min-class-size", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("flow", help="gradient flow of a linear MPNN")
    p.add_argument("--toy", default="separable")
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--eta", type=float, default=1e-2)
    p.add_argument("--loss", choices=("exponential", "logistic"), default="exponential")
    p.add_argument("--stride", type=int, default=1000)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--normalized-step", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_flow)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, SizeCapError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 2
    except Exception as err:  # noqa: BLE001
        sys.stderr.write(f"internal error: {type(err).__name__}: {err}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
