"""CSV readers and writers for per-node scalars and binned curves."""
from __future__ import annotations

import csv

import numpy as np

from .graph import DirectedGraph
from .stats import BinnedConditional, CCDFCurve


def write_state(path, g: DirectedGraph, values, column: str = "x_steady") -> None:
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", column])
        for i, v in enumerate(values.tolist()):
            w.writerow([g.label(i), repr(v)])


def read_columns(path) -> dict[str, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        cols: dict[str, list[str]] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name in reader.fieldnames:
                cols[name].append(row[name])
    return cols


def read_state(path, g: DirectedGraph | None = None, column: str = "x_steady") -> np.ndarray:
    """Read one numeric column; with a graph, rows are aligned by node label."""
    cols = read_columns(path)
    if column not in cols:
        raise ValueError(f"{path}: no column {column!r} (have {', '.join(cols)})")
    vals = np.array([float(v) for v in cols[column]])
    if g is None:
        return vals
    if "node_id" not in cols:
        raise ValueError(f"{path}: node_id column needed to align with the graph")
    index = {g.label(i): i for i in range(g.n)}
    out = np.full(g.n, np.nan)
    for lab, v in zip(cols["node_id"], vals):
        if lab not in index:
            raise ValueError(f"{path}: node {lab!r} is not in the graph")
        out[index[lab]] = v
    if np.isnan(out).any():
        raise ValueError(f"{path}: {int(np.isnan(out).sum())} graph nodes have no value")
    return out


def write_ccdf(path, curve: CCDFCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "ccdf"])
        for v, p in zip(curve.values.tolist(), curve.fraction.tolist()):
            w.writerow([repr(v), repr(p)])


def write_binned(path, curve: BinnedConditional) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_center", "mean", "count", "p05", "p95", "mode"])
        for row in curve.rows():
            w.writerow([repr(float(row[0])), repr(float(row[1])), row[2],
                        repr(float(row[3])), repr(float(row[4])), repr(float(row[5]))])
