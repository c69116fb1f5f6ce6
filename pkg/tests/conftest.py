"""Shared fixtures and independent oracles."""
from __future__ import annotations

import math
from collections import deque

import numpy as np
import pytest

from moneyflow.graph import DirectedGraph

# 0->1, 1->2, 2->0, 2->3, 3->0
FIVE_EDGE = ([0, 1, 2, 2, 3], [1, 2, 0, 3, 0])


@pytest.fixture
def five_edge():
    return DirectedGraph.from_edges(*FIVE_EDGE)


def random_digraph(n: int, p: float, rng) -> DirectedGraph:
    a = rng.random((n, n)) < p
    np.fill_diagonal(a, False)
    src, dst = np.nonzero(a)
    return DirectedGraph.from_edges(src, dst, n)


def reach(adj: list[list[int]], start: int) -> set[int]:
    seen = {start}
    q = deque([start])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                q.append(v)
    return seen


def scc_oracle(n: int, src, dst) -> list[frozenset[int]]:
    """SCCs as forward-reach intersected with backward-reach."""
    fwd = [[] for _ in range(n)]
    bwd = [[] for _ in range(n)]
    for a, b in zip(src, dst):
        fwd[a].append(b)
        bwd[b].append(a)
    out, done = [], set()
    for v in range(n):
        if v in done:
            continue
        comp = frozenset(reach(fwd, v) & reach(bwd, v))
        done |= comp
        out.append(comp)
    return out


def period(g: DirectedGraph) -> int:
    """Period of a strongly connected graph (gcd of level differences)."""
    level = {0: 0}
    q = deque([0])
    d = 0
    while q:
        u = q.popleft()
        for v in g.out_neighbors(u).tolist():
            if v not in level:
                level[v] = level[u] + 1
                q.append(v)
            else:
                d = math.gcd(d, level[u] + 1 - level[v])
    return abs(d)


def dense_kernel(g: DirectedGraph, model: int) -> np.ndarray:
    """Q[m, i] straight from the model definitions, with plain loops."""
    n = g.n
    q = np.zeros((n, n))
    k_in = g.in_degree
    for i in range(n):
        outs = g.out_neighbors(i).tolist()
        if not outs:
            continue
        if model == 1:
            for m in outs:
                q[m, i] = 1.0 / len(outs)
        else:
            denom = sum(k_in[j] for j in outs)
            for m in outs:
                q[m, i] = k_in[m] / denom
    return q


def dense_closed_steady(g: DirectedGraph, model: int, total: float) -> np.ndarray:
    q = dense_kernel(g, model)
    w, v = np.linalg.eig(q)
    j = int(np.argmin(np.abs(w - 1.0)))
    x = np.real(v[:, j])
    return x / x.sum() * total


def dense_open_steady(g: DirectedGraph, model: int, r: float, f: float) -> np.ndarray:
    q = dense_kernel(g, model)
    return np.linalg.solve(np.eye(g.n) - r * q, np.full(g.n, f))


def rel_linf(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
