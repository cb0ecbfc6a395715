"""TUDataset flat files in and out, plus CSV/JSON export of results.

Exported files carry a schema name and version.  Floats are written with 17
significant digits in CSV; JSON uses Python's shortest round-trip repr, with
non-finite values spelled ``"inf"``, ``"-inf"`` or ``"nan"``.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .flow import FlowTrajectory
from .graph import Graph
from .kernels import GramMatrix
from .margin import MarginResult
from .svm import CVReport

__all__ = [
    "DatasetBundle",
    "TUFormatError",
    "load_tudataset",
    "write_tudataset",
    "export",
    "to_csv",
    "to_json",
    "margin_from_json",
    "read_edge_list",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
_SPLIT = re.compile(r"[,\s]+")


class TUFormatError(ValueError):
    pass


@dataclass
class DatasetBundle:
    name: str
    graphs: list[Graph]
    targets: list[int]
    node_labels: list[list[int]] | None = None
    source: str = ""
    dropped_self_loops: int = 0

    @property
    def classes(self) -> list[int]:
        return sorted(set(self.targets))

    def mean_order(self) -> float:
        return float(np.mean([g.n for g in self.graphs]))


def _rows(path: Path) -> list[list[int]]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append([int(float(tok)) for tok in _SPLIT.split(line) if tok])
            except ValueError as err:
                raise TUFormatError(f"{path.name}:{lineno}: cannot parse {line!r}") from err
    return out


def _need(path: Path) -> Path:
    if not path.is_file():
        raise FileNotFoundError(f"missing dataset file {path}")
    return path


def load_tudataset(directory, name: str, with_node_labels: bool = False) -> DatasetBundle:
    """Parse ``<name>_A.txt``, ``<name>_graph_indicator.txt`` and ``<name>_graph_labels.txt``."""
    root = Path(directory)
    if (root / name).is_dir() and not (root / f"{name}_A.txt").exists():
        root = root / name
    indicator = [r[0] for r in _rows(_need(root / f"{name}_graph_indicator.txt"))]
    labels = [r[0] for r in _rows(_need(root / f"{name}_graph_labels.txt"))]
    edges = _rows(_need(root / f"{name}_A.txt"))
    num_nodes = len(indicator)
    num_graphs = len(labels)
    if not indicator:
        raise TUFormatError("empty graph indicator")
    # graph ids must start at 1 and increase by at most one from node to node
    if indicator[0] != 1 or any(b not in (a, a + 1) for a, b in zip(indicator, indicator[1:])):
        raise TUFormatError("graph indicator is not contiguous")
    if indicator[-1] != num_graphs:
        raise TUFormatError(f"indicator names {indicator[-1]} graphs but {num_graphs} labels are given")
    first = {}
    for v, gid in enumerate(indicator):
        first.setdefault(gid, v)
    per_graph: list[set] = [set() for _ in range(num_graphs)]
    loops = 0
    for row in edges:
        if len(row) != 2:
            raise TUFormatError(f"edge row {row} does not have two entries")
        u, v = row[0] - 1, row[1] - 1
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise TUFormatError(f"edge ({u + 1}, {v + 1}) names a node outside 1..{num_nodes}")
        gid = indicator[u]
        if indicator[v] != gid:
            raise TUFormatError(f"edge ({u + 1}, {v + 1}) joins two graphs")
        if u == v:
            loops += 1
            continue
        off = first[gid]
        a, b = u - off, v - off
        per_graph[gid - 1].add((min(a, b), max(a, b)))
    sizes = [0] * num_graphs
    for gid in indicator:
        sizes[gid - 1] += 1
    node_labels = None
    if with_node_labels:
        raw = [r[0] for r in _rows(_need(root / f"{name}_node_labels.txt"))]
        if len(raw) != num_nodes:
            raise TUFormatError("node label count does not match the indicator")
        node_labels = [raw[first[g + 1]: first[g + 1] + sizes[g]] for g in range(num_graphs)]
    graphs = []
    for g in range(num_graphs):
        lab = None
        if node_labels is not None:
            # the graph type wants non-negative labels; shift if needed
            lo = min(node_labels[g], default=0)
            lab = [x - min(lo, 0) for x in node_labels[g]]
        graphs.append(Graph(sizes[g], tuple(sorted(per_graph[g])), lab))
    return DatasetBundle(name, graphs, labels, node_labels, str(root), loops)


def write_tudataset(directory, name: str, graphs: Sequence[Graph], targets: Sequence[int],
                    node_labels: bool = False) -> Path:
    """Write graphs in TUDataset layout (both edge directions listed)."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    offset = 0
    with open(root / f"{name}_A.txt", "w") as fa, open(root / f"{name}_graph_indicator.txt", "w") as fi:
        for gid, g in enumerate(graphs, 1):
            for u, v in g.edges:
                fa.write(f"{u + offset + 1}, {v + offset + 1}\n{v + offset + 1}, {u + offset + 1}\n")
            fi.write(f"{gid}\n" * g.n)
            offset += g.n
    with open(root / f"{name}_graph_labels.txt", "w") as fl:
        fl.write("".join(f"{int(t)}\n" for t in targets))
    if node_labels:
        with open(root / f"{name}_node_labels.txt", "w") as fn:
            for g in graphs:
                fn.write("".join(f"{x}\n" for x in g.label_list()))
    return root


def read_edge_list(path) -> Graph:
    """Whitespace or comma separated ``u v`` pairs (0-based); ``#`` starts a comment."""
    edges = []
    n = 0
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = [t for t in _SPLIT.split(line) if t]
            if len(toks) == 1:
                n = max(n, int(toks[0]))
                continue
            u, v = int(toks[0]), int(toks[1])
            edges.append((u, v))
            n = max(n, u + 1, v + 1)
    return Graph.from_edges(n, edges)


# export


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _schema(obj) -> str:
    for cls, name in ((CVReport, "cv-report"), (MarginResult, "margin-result"),
                      (FlowTrajectory, "flow-trajectory"), (GramMatrix, "gram-matrix")):
        if isinstance(obj, cls):
            return name
    raise TypeError(f"cannot export {type(obj).__name__}")


CV_COLUMNS = ("dataset", "kernel", "patterns", "repetition", "fold", "T", "C", "train_acc", "test_acc", "margin")


def to_csv(obj) -> str:
    kind = _schema(obj)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if kind == "gram-matrix":
        buf.write(f"# schema=wlmargin.{kind} version={SCHEMA_VERSION} kernel={obj.kind} "
                  f"normalized={_fmt(obj.normalized)} T={obj.T} patterns={obj.patterns}\n")
        for row in obj.values:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()
    buf.write(f"# schema=wlmargin.{kind} version={SCHEMA_VERSION}\n")
    if kind == "cv-report":
        w.writerow(CV_COLUMNS)
        for r in obj.folds:
            margin = r.get("margin", float("nan"))
            if "separable" in r and not r["separable"]:
                margin = "NLS"
            w.writerow([obj.dataset, obj.kernel, obj.patterns] +
                       [_fmt(r[k]) for k in ("repetition", "fold", "T", "C", "train_acc", "test_acc")] +
                       [_fmt(margin)])
    elif kind == "margin-result":
        for k, v in obj.summary().items():
            w.writerow([k, _fmt(v) if v is not None else ""])
    else:
        rows = obj.rows()
        if rows:
            cols = list(rows[0])
            w.writerow(cols)
            for r in rows:
                w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def _payload(obj) -> dict:
    kind = _schema(obj)
    if kind == "gram-matrix":
        body = {"kernel": obj.kind, "normalized": obj.normalized, "T": obj.T, "patterns": obj.patterns,
                "values": obj.values}
    elif kind == "cv-report":
        body = {"dataset": obj.dataset, "kernel": obj.kernel, "patterns": obj.patterns,
                "repetitions": obj.repetitions, "multiclass": obj.multiclass,
                "test_mean": obj.test_mean, "test_std": obj.test_std,
                "train_mean": obj.train_mean, "train_std": obj.train_std,
                "margin": obj.margin, "nls_folds": obj.nls_folds,
                "unconverged_fits": obj.unconverged_fits, "folds": obj.folds}
    elif kind == "margin-result":
        body = {"separable": obj.separable, "lambda": obj.lam, "radius": obj.radius, "ratio": obj.ratio,
                "radius_meb": obj.radius_meb, "alpha": obj.alpha, "beta": obj.beta, "w": obj.w, "b": obj.b,
                "x_pos": obj.x_pos, "x_neg": obj.x_neg, "tol": obj.tol, "gap": obj.gap,
                "iterations": obj.iterations}
    else:
        body = {"loss": obj.loss, "accepted": obj.accepted, "halvings": obj.halvings, "time": obj.time,
                "records": obj.rows()}
    return {"schema": f"wlmargin.{kind}", "version": SCHEMA_VERSION, **body}


def to_json(obj) -> str:
    return json.dumps(_jsonable(_payload(obj)), indent=2) + "\n"


def _num(x):
    if isinstance(x, str):
        return float(x)
    return x


def margin_from_json(text: str) -> MarginResult:
    d = json.loads(text)
    if d.get("schema") != "wlmargin.margin-result":
        raise ValueError("not a margin result document")
    arr = lambda v: None if v is None else np.asarray(v, dtype=np.float64)  # noqa: E731
    return MarginResult(
        separable=d["separable"], lam=_num(d["lambda"]), radius=_num(d["radius"]), ratio=_num(d["ratio"]),
        alpha=arr(d["alpha"]), beta=arr(d["beta"]), w=arr(d["w"]),
        b=None if d["b"] is None else _num(d["b"]), x_pos=arr(d["x_pos"]), x_neg=arr(d["x_neg"]),
        tol=_num(d["tol"]), gap=_num(d["gap"]), iterations=d["iterations"],
        radius_meb=None if d["radius_meb"] is None else _num(d["radius_meb"]),
    )


def export(obj, fmt: str, path) -> Path:
    text = {"csv": to_csv, "json": to_json}.get(fmt)
    if text is None:
        raise ValueError(f"unknown export format {fmt!r}")
    path = Path(path)
    path.write_text(text(obj))
    return path
