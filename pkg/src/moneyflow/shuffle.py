"""Degree-preserving randomization by repeated edge switching.

A move picks two edges X1->Y1, X2->Y2 and rewires them to X1->Y2,
X2->Y1.  Moves that would create a self-loop or a duplicate edge are
rejected; rejected proposals still count toward the attempt budget.

Random edge pairs come from ``numpy.random.Generator(PCG64(seed))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _edgeset
from .graph import DirectedGraph

CHUNK = 1 << 20


@dataclass(frozen=True)
class ShuffleConfig:
    swap_multiplier: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not self.swap_multiplier > 0:
            raise ValueError("swap_multiplier must be positive")


@dataclass
class SwapReport:
    attempts: int = 0
    accepted: int = 0

    @property
    def rejected(self) -> int:
        return self.attempts - self.accepted


def degree_preserving_shuffle(g: DirectedGraph, cfg: ShuffleConfig = ShuffleConfig(),
                              report: SwapReport | None = None) -> DirectedGraph:
    report = report if report is not None else SwapReport()
    m = g.n_edges
    if m < 2:
        return g
    src, dst = g.edges()
    table = _edgeset.table_build(src, dst, g.n)
    rng = np.random.default_rng(cfg.seed)
    budget = int(np.ceil(cfg.swap_multiplier * m))
    done = 0
    while done < budget:
        size = min(CHUNK, budget - done)
        p1 = rng.integers(0, m, size=size)
        p2 = rng.integers(0, m, size=size)
        report.accepted += int(_edgeset.shuffle_chunk(src, dst, table, g.n, p1, p2))
        done += size
    report.attempts += budget
    return DirectedGraph.from_edges(src, dst, g.n, g.labels)
