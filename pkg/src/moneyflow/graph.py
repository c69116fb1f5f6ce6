"""Immutable simple directed graphs in compressed adjacency form.

Edges point from buyer to seller, i.e. in the direction money flows.
Both orientations are stored as CSR-style (pointer, index) arrays with
sorted neighbor lists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class IngestError(ValueError):
    """Raised when an edge-list file cannot be parsed."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _csr(keys: np.ndarray, vals: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # keys/vals must already be sorted by (keys, vals)
    counts = np.bincount(keys, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, vals.astype(np.int64, copy=True)


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    n: int
    out_ptr: np.ndarray
    out_idx: np.ndarray
    in_ptr: np.ndarray
    in_idx: np.ndarray
    labels: Optional[tuple[str, ...]] = field(default=None)

    @classmethod
    def from_edges(cls, src, dst, n: Optional[int] = None,
                   labels: Optional[Sequence[str]] = None) -> "DirectedGraph":
        """Build a graph, silently dropping self-loops and duplicate edges.

        Use :func:`simplify_edges` first if the dropped counts matter.
        """
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        if n is None:
            n = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1)
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoint out of range")
        if labels is not None and len(labels) != n:
            raise ValueError("labels must have one entry per node")
        src, dst, _, _ = simplify_edges(src, dst, n)
        out_ptr, out_idx = _csr(src, dst, n)
        order = np.lexsort((src, dst))
        in_ptr, in_idx = _csr(dst[order], src[order], n)
        return cls(
            n=int(n),
            out_ptr=_freeze(out_ptr),
            out_idx=_freeze(out_idx),
            in_ptr=_freeze(in_ptr),
            in_idx=_freeze(in_idx),
            labels=None if labels is None else tuple(str(x) for x in labels),
        )

    @property
    def n_edges(self) -> int:
        return int(self.out_idx.size)

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    @property
    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def out_neighbors(self, i: int) -> np.ndarray:
        return self.out_idx[self.out_ptr[i]:self.out_ptr[i + 1]]

    def in_neighbors(self, m: int) -> np.ndarray:
        return self.in_idx[self.in_ptr[m]:self.in_ptr[m + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (src, dst) arrays sorted by source then destination."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return src, self.out_idx.copy()

    def adjacency(self) -> sp.csr_matrix:
        """Sparse A with A[i, j] = 1 for each edge i -> j."""
        data = np.ones(self.n_edges, dtype=np.float64)
        return sp.csr_matrix((data, self.out_idx, self.out_ptr), shape=(self.n, self.n))

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def subgraph(self, nodes) -> "DirectedGraph":
        """Induced subgraph; node k of the result is ``nodes[k]`` of this graph.

        Nodes keep their labels (the parent's index when it has none), so
        files written from the subgraph use the parent's ids.
        """
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        src, dst = self.edges()
        keep = (remap[src] >= 0) & (remap[dst] >= 0)
        labels = [self.label(i) for i in nodes.tolist()]
        return DirectedGraph.from_edges(remap[src[keep]], remap[dst[keep]], int(nodes.size), labels)

    def same_structure(self, other: "DirectedGraph") -> bool:
        return (self.n == other.n
                and np.array_equal(self.out_ptr, other.out_ptr)
                and np.array_equal(self.out_idx, other.out_idx))

    def __repr__(self) -> str:
        return f"DirectedGraph(n={self.n}, n_edges={self.n_edges})"


def simplify_edges(src: np.ndarray, dst: np.ndarray, n: int):
    """Drop self-loops and duplicates.

    Returns ``(src, dst, n_self_loops, n_duplicates)`` with the kept edges
    sorted by (src, dst).
    """
    loops = src == dst
    n_loops = int(loops.sum())
    src, dst = src[~loops], dst[~loops]
    keys = np.unique(src * np.int64(n) + dst)
    n_dup = int(src.size - keys.size)
    return keys // n, keys % n, n_loops, n_dup


@dataclass
class IngestReport:
    lines: int = 0
    edges_kept: int = 0
    self_loops_dropped: int = 0
    duplicates_dropped: int = 0


@dataclass
class IngestOptions:
    comment: str = "#"
    # reject ids that are not base-10 integers
    integer_ids: bool = False


def _label_order(labels: list[str]) -> list[str]:
    try:
        return sorted(labels, key=int)
    except ValueError:
        return sorted(labels)


def load_edge_list(path, options: Optional[IngestOptions] = None,
                   report: Optional[IngestReport] = None) -> DirectedGraph:
    """Read a tab-separated ``src<TAB>dst`` edge list.

    Node labels are mapped to dense indices in sorted order (numeric order
    when every label is an integer), so a graph written with
    :func:`write_edge_list` reloads to the same indices.
    """
    options = options or IngestOptions()
    report = report if report is not None else IngestReport()
    raw_src: list[str] = []
    raw_dst: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith(options.comment):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise IngestError(f"{path}:{lineno}: expected 2 tab-separated fields, got {len(parts)}")
            a, b = parts[0].strip(), parts[1].strip()
            if not a or not b:
                raise IngestError(f"{path}:{lineno}: empty node id")
            if options.integer_ids:
                try:
                    a, b = str(int(a)), str(int(b))
                except ValueError:
                    raise IngestError(f"{path}:{lineno}: unparsable node id") from None
            raw_src.append(a)
            raw_dst.append(b)
    if not raw_src:
        raise IngestError(f"{path}: no edges")
    report.lines = len(raw_src)

    labels = _label_order(list(set(raw_src) | set(raw_dst)))
    index = {lab: i for i, lab in enumerate(labels)}
    src = np.fromiter((index[a] for a in raw_src), dtype=np.int64, count=len(raw_src))
    dst = np.fromiter((index[b] for b in raw_dst), dtype=np.int64, count=len(raw_dst))
    _, _, report.self_loops_dropped, report.duplicates_dropped = simplify_edges(src, dst, len(labels))
    g = DirectedGraph.from_edges(src, dst, len(labels), labels)
    report.edges_kept = g.n_edges
    return g


def write_edge_list(g: DirectedGraph, path, use_labels: bool = True) -> None:
    """Write ``src<TAB>dst`` lines, using node labels unless ``use_labels`` is off."""
    src, dst = g.edges()
    with open(path, "w", encoding="utf-8") as fh:
        if use_labels and g.labels is not None:
            lab = g.labels
            fh.writelines(f"{lab[a]}\t{lab[b]}\n" for a, b in zip(src.tolist(), dst.tolist()))
        else:
            fh.writelines(f"{a}\t{b}\n" for a, b in zip(src.tolist(), dst.tolist()))


def strongly_connected_components(g: DirectedGraph) -> np.ndarray:
    """Component id per node; ids are contiguous from 0."""
    if g.n == 0:
        return np.zeros(0, dtype=np.int64)
    _, comp = connected_components(g.adjacency(), directed=True, connection="strong")
    return comp.astype(np.int64)


def is_strongly_connected(g: DirectedGraph) -> bool:
    return g.n > 0 and int(strongly_connected_components(g).max()) == 0


def largest_scc(g: DirectedGraph) -> tuple[DirectedGraph, np.ndarray]:
    """Induced subgraph on the largest SCC and the new-to-old index map.

    Ties go to the component containing the smallest node index.
    """
    if g.n == 0:
        raise ValueError("graph has no nodes")
    comp = strongly_connected_components(g)
    sizes = np.bincount(comp)
    best = sizes.max()
    candidates = np.flatnonzero(sizes == best)
    # smallest node index of each tied component
    first = np.full(comp.max() + 1, g.n, dtype=np.int64)
    np.minimum.at(first, comp, np.arange(g.n))
    winner = candidates[np.argmin(first[candidates])]
    nodes = np.flatnonzero(comp == winner)
    return g.subgraph(nodes), nodes


def edge_degree_correlation(g: DirectedGraph) -> float:
    """Pearson correlation of (k_out(src), k_in(dst)) over all edges."""
    src, dst = g.edges()
    if src.size < 2:
        return 0.0
    a = g.out_degree[src].astype(np.float64)
    b = g.in_degree[dst].astype(np.float64)
    if a.std() == 0 or b.std() == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])
