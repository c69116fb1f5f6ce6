"""Synthetic directed scale-free networks with tunable degree correlation.

Pipeline: discrete Pareto degree sequences with matched totals, stub
matching into a simple digraph, then greedy degree-preserving rewiring
toward a target edge-wise degree correlation.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
from scipy import special

from . import _edgeset
from .graph import DirectedGraph, edge_degree_correlation
from .shuffle import CHUNK

REMATCH_ATTEMPTS = 100
_REMATCH_CHUNK = 10_000


@dataclass(frozen=True)
class SynthConfig:
    node_count: int = 100_000
    alpha_in: float = 1.3
    alpha_out: float = 1.3
    k_min: int = 1
    correlation_target: float = 0.0
    seed: int = 0
    rewire_budget: float = 10.0
    # Gaussian-copula correlation between a node's in- and out-degree draws
    inout_coupling: float = 0.0
    # degree cap; None means node_count - 1
    k_max: Optional[int] = None

    def __post_init__(self):
        if self.node_count < 10:
            raise ValueError("node_count must be at least 10")
        if not (self.alpha_in > 0 and self.alpha_out > 0):
            raise ValueError("tail exponents must be positive")
        if self.k_min < 1:
            raise ValueError("k_min must be >= 1")
        if not abs(self.correlation_target) < 1:
            raise ValueError("correlation_target must lie in (-1, 1)")
        if not self.rewire_budget > 0:
            raise ValueError("rewire_budget must be positive")
        if self.k_max is not None and not self.k_min <= self.k_max < self.node_count:
            raise ValueError("k_max must lie in [k_min, node_count)")
        if not 0 <= self.inout_coupling <= 1:
            raise ValueError("inout_coupling must lie in [0, 1]")


def _pareto_floor(u: np.ndarray, alpha: float, k_min: int, k_max: Optional[int]) -> np.ndarray:
    """Inverse CDF of a Pareto on [k_min, k_max + 1), floored to integers."""
    mass = 1.0 if k_max is None else 1.0 - ((k_max + 1) / k_min) ** -alpha
    x = k_min * (1.0 - u * mass) ** (-1.0 / alpha)
    x = np.floor(x)
    if k_max is not None:
        x = np.minimum(x, k_max)
    # cap before the int cast; only reachable without k_max
    return np.minimum(x, np.iinfo(np.int64).max // 4).astype(np.int64)


def coupled_uniforms(n: int, coupling: float, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Two uniform vectors joined by a Gaussian copula with correlation ``coupling``."""
    rng = np.random.default_rng(seed)
    z1 = rng.standard_normal(n)
    z2 = coupling * z1 + np.sqrt(1.0 - coupling ** 2) * rng.standard_normal(n)
    return special.ndtr(z1), special.ndtr(z2)


def sample_powerlaw_degrees(n: int, alpha: float, k_min: int = 1, total: Optional[int] = None,
                            seed=None, k_max: Optional[int] = None,
                            uniforms: Optional[np.ndarray] = None) -> np.ndarray:
    """Draw floor(Pareto) degrees with P(K >= k) = (k / k_min)**-alpha.

    With ``k_max`` the law is truncated at k_max (inverse CDF of the
    truncated Pareto, so no redraws).  ``uniforms`` replaces the internal
    uniform draws, which lets callers couple two sequences.
    With ``total`` random entries are nudged by +-1 (never below k_min,
    never above k_max) until the sequence sums to ``total``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if total is not None:
        if total < n * k_min:
            raise ValueError(f"total {total} is below n*k_min = {n * k_min}")
        if k_max is not None and total > n * k_max:
            raise ValueError(f"total {total} exceeds n*k_max = {n * k_max}")
    rng = np.random.default_rng(seed)
    u = rng.random(n) if uniforms is None else np.asarray(uniforms, dtype=np.float64)
    if u.shape != (n,):
        raise ValueError("uniforms must have length n")
    deg = _pareto_floor(u, alpha, k_min, k_max)
    if total is not None:
        diff = int(total - deg.sum())
        while diff != 0:
            if diff > 0:
                pool = np.flatnonzero(deg < k_max) if k_max is not None else np.arange(n)
                pick = rng.choice(pool, size=min(diff, pool.size), replace=False)
                deg[pick] += 1
                diff -= pick.size
            else:
                pool = np.flatnonzero(deg > k_min)
                pick = rng.choice(pool, size=min(-diff, pool.size), replace=False)
                deg[pick] -= 1
                diff += pick.size
    return deg


@dataclass
class MatchReport:
    requested_edges: int = 0
    realized_edges: int = 0
    collisions: int = 0
    rematched: int = 0
    dropped: int = 0
    mismatched_nodes: int = 0


def directed_configuration_model(in_seq, out_seq, seed=None,
                                 report: Optional[MatchReport] = None) -> DirectedGraph:
    """Random simple digraph approximately realizing the degree sequences.

    Out-stubs are paired with a uniformly shuffled list of in-stubs.  A
    pair that would be a self-loop or a repeated edge is re-matched by
    swapping destinations with random pairs, up to 100 tries, and
    dropped otherwise.
    """
    in_seq = np.asarray(in_seq, dtype=np.int64)
    out_seq = np.asarray(out_seq, dtype=np.int64)
    if in_seq.shape != out_seq.shape:
        raise ValueError("in_seq and out_seq must have equal length")
    if in_seq.sum() != out_seq.sum():
        raise ValueError(f"degree sums differ: in={in_seq.sum()} out={out_seq.sum()}")
    report = report if report is not None else MatchReport()
    n = in_seq.size
    rng = np.random.default_rng(seed)

    src = np.repeat(np.arange(n, dtype=np.int64), out_seq)
    dst = rng.permutation(np.repeat(np.arange(n, dtype=np.int64), in_seq))
    m = src.size
    report.requested_edges = int(m)

    table = _edgeset.table_new(m)
    good = np.ones(m, dtype=np.bool_)
    _edgeset.place_pairs(src, dst, n, table, good)
    bad = np.flatnonzero(~good)
    report.collisions = int(bad.size)
    for start in range(0, bad.size, _REMATCH_CHUNK):
        ids = bad[start:start + _REMATCH_CHUNK]
        draws = rng.random(ids.size * REMATCH_ATTEMPTS)
        _edgeset.rematch_chunk(src, dst, n, table, good, ids, draws, REMATCH_ATTEMPTS)
    report.dropped = int((~good).sum())
    report.rematched = report.collisions - report.dropped

    g = DirectedGraph.from_edges(src[good], dst[good], n)
    report.realized_edges = g.n_edges
    report.mismatched_nodes = int(((g.in_degree != in_seq) | (g.out_degree != out_seq)).sum())
    return g


@dataclass
class RewireReport:
    attempts: int = 0
    accepted: int = 0
    initial_correlation: float = 0.0
    final_correlation: float = 0.0


def correlation_rewire(g: DirectedGraph, target: float, budget: float = 10.0, seed=None,
                       report: Optional[RewireReport] = None, stop_tol: float = 0.02) -> DirectedGraph:
    """Degree-preserving swaps accepted only if they move the edge-wise
    degree correlation closer to ``target``.

    Stops after ``budget * |E|`` proposals or once within ``stop_tol``.
    """
    report = report if report is not None else RewireReport()
    rho0 = edge_degree_correlation(g)
    report.initial_correlation = report.final_correlation = rho0
    m = g.n_edges
    if m < 2 or abs(rho0 - target) < stop_tol:
        return g
    src, dst = g.edges()
    a = g.out_degree.astype(np.float64)
    b = g.in_degree.astype(np.float64)
    ae, be = a[src], b[dst]
    mu = ae.mean() * be.mean()
    sd = ae.std() * be.std()
    if sd == 0:
        return g
    cross = float(np.dot(ae, be))

    table = _edgeset.table_build(src, dst, g.n)
    rng = np.random.default_rng(seed)
    total = int(np.ceil(budget * m))
    done = 0
    while done < total:
        size = min(CHUNK, total - done)
        p1 = rng.integers(0, m, size=size)
        p2 = rng.integers(0, m, size=size)
        used, acc, cross = _edgeset.rewire_chunk(src, dst, table, g.n, a, b, p1, p2,
                                                 cross, mu, sd, target, stop_tol)
        done += int(used)
        report.accepted += int(acc)
        if used < size:
            break
    report.attempts = done
    out = DirectedGraph.from_edges(src, dst, g.n, g.labels)
    report.final_correlation = edge_degree_correlation(out)
    return out


@dataclass
class GenerationReport:
    config: dict
    requested_edges: int
    realized_edges: int
    requested_in_total: int
    requested_out_total: int
    realized_in_total: int
    realized_out_total: int
    collisions: int
    dropped: int
    mismatched_nodes: int
    rewire_attempts: int
    rewire_accepted: int
    initial_correlation: float
    final_correlation: float


def generate(cfg: SynthConfig) -> tuple[DirectedGraph, GenerationReport]:
    s_unif, s_in, s_out, s_match, s_rewire = np.random.SeedSequence(cfg.seed).spawn(5)
    n = cfg.node_count
    k_max = cfg.k_max if cfg.k_max is not None else n - 1
    u_in, u_out = coupled_uniforms(n, cfg.inout_coupling, s_unif)
    in_seq = sample_powerlaw_degrees(n, cfg.alpha_in, cfg.k_min, seed=s_in, k_max=k_max, uniforms=u_in)
    out_seq = sample_powerlaw_degrees(n, cfg.alpha_out, cfg.k_min, total=int(in_seq.sum()),
                                      seed=s_out, k_max=k_max, uniforms=u_out)
    mrep = MatchReport()
    g = directed_configuration_model(in_seq, out_seq, seed=s_match, report=mrep)
    rrep = RewireReport()
    g = correlation_rewire(g, cfg.correlation_target, cfg.rewire_budget, seed=s_rewire, report=rrep)
    rep = GenerationReport(
        config=asdict(cfg),
        requested_edges=mrep.requested_edges,
        realized_edges=g.n_edges,
        requested_in_total=int(in_seq.sum()),
        requested_out_total=int(out_seq.sum()),
        realized_in_total=int(g.in_degree.sum()),
        realized_out_total=int(g.out_degree.sum()),
        collisions=mrep.collisions,
        dropped=mrep.dropped,
        mismatched_nodes=mrep.mismatched_nodes,
        rewire_attempts=rrep.attempts,
        rewire_accepted=rrep.accepted,
        initial_correlation=rrep.initial_correlation,
        final_correlation=rrep.final_correlation,
    )
    return g, rep
