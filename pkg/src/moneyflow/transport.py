"""Money-transport dynamics on directed graphs.

Two ways for a node to split what it holds among its out-neighbors:

* ``UNIFORM`` (Model-1): evenly, Q[m, i] = 1 / k_out(i).
* ``IN_DEGREE`` (Model-2): in proportion to the receiver's in-degree,
  Q[m, i] = k_in(m) / sum_{j in out(i)} k_in(j).

Closed dynamics iterate x <- Q x and conserve the total on a strongly
connected graph.  Open dynamics iterate x <- r Q x + f with dissipation
1 - r and constant per-node injection f.  Sources with a zero
denominator contribute nothing, so their mass is lost.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numba
import numpy as np
import scipy.sparse as sp

from .graph import DirectedGraph, is_strongly_connected

COLUMN_SUM_TOL = 1e-12

# skip probing TBB first; old system TBB builds only produce a warning
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


class ModelKind(enum.Enum):
    UNIFORM = 1
    IN_DEGREE = 2

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        s = str(value).strip().lower()
        if s in ("1", "uniform", "model1", "model-1"):
            return cls.UNIFORM
        if s in ("2", "in_degree", "in-degree", "model2", "model-2"):
            return cls.IN_DEGREE
        raise ValueError(f"unknown model {value!r}")


class Mode(enum.Enum):
    CLOSED = "closed"
    OPEN = "open"


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Sparse kernel ``matrix[m, i] = Q_mi``; inactive columns are zero."""
    graph: DirectedGraph
    model: ModelKind
    matrix: sp.csr_matrix
    active: np.ndarray
    edge_weights: np.ndarray  # aligned with graph.edges() order

    @property
    def n(self) -> int:
        return self.graph.n


def _column_sums(src: np.ndarray, w: np.ndarray, g: DirectedGraph) -> np.ndarray:
    # naive sums drift by ~k * eps on hubs; use exact summation there
    col = np.bincount(src, weights=w, minlength=g.n)
    ptr = g.out_ptr
    for i in np.flatnonzero(g.out_degree > 256):
        col[i] = math.fsum(w[ptr[i]:ptr[i + 1]])
    return col


def build_kernel(g: DirectedGraph, model: Union[ModelKind, str, int]) -> TransitionKernel:
    model = ModelKind.parse(model)
    src, dst = g.edges()
    k_out = g.out_degree.astype(np.float64)
    if model is ModelKind.UNIFORM:
        denom = k_out
        numer = np.ones(src.size)
    else:
        k_in = g.in_degree.astype(np.float64)
        denom = np.bincount(src, weights=k_in[dst], minlength=g.n)
        numer = k_in[dst]
    active = denom > 0
    w = numer / denom[src]  # every edge source has denom > 0
    matrix = sp.csr_matrix((w, (dst, src)), shape=(g.n, g.n))
    matrix.sum_duplicates()
    matrix.sort_indices()

    col = _column_sums(src, w, g)
    dev = np.abs(col[active] - 1.0)
    if dev.size and dev.max() > COLUMN_SUM_TOL:
        raise AssertionError(f"kernel column sums deviate from 1 by {dev.max():.3e}")
    if np.any(col[~active] != 0):
        raise AssertionError("inactive kernel column carries weight")
    w.setflags(write=False)
    active.setflags(write=False)
    return TransitionKernel(g, model, matrix, active, w)


@numba.njit(parallel=True, cache=True)
def _csr_matvec_parallel(indptr, indices, data, x, r, f):
    n = indptr.size - 1
    y = np.empty(n)
    for m in numba.prange(n):
        acc = 0.0
        for p in range(indptr[m], indptr[m + 1]):
            acc += data[p] * x[indices[p]]
        y[m] = r * acc + f
    return y


def step(k: TransitionKernel, x, r: float = 1.0, f: float = 0.0, threads: int = 1) -> np.ndarray:
    """One update x'_m = r * sum_i Q_mi x_i + f.

    With ``threads > 1`` destination rows are split across workers; each
    row is still summed in stored order, so results stay bit-identical.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (k.n,):
        raise ValueError(f"state has shape {x.shape}, expected ({k.n},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("state contains non-finite values")
    if not (0 < r <= 1) or f < 0:
        raise ValueError("need 0 < r <= 1 and f >= 0")
    return _apply(k, x, r, f, threads)


def _apply(k: TransitionKernel, x: np.ndarray, r: float, f: float, threads: int = 1) -> np.ndarray:
    # CSR rows are destinations, so each entry is summed in a fixed order
    if threads > 1:
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
        mat = k.matrix
        return _csr_matvec_parallel(mat.indptr, mat.indices, mat.data, x, float(r), float(f))
    y = k.matrix @ x
    if r != 1.0:
        y *= r
    if f != 0.0:
        y += f
    return y


@dataclass
class TransportConfig:
    model: ModelKind = ModelKind.IN_DEGREE
    mode: Mode = Mode.CLOSED
    r: float = 1.0
    f: float = 0.0
    tolerance: float = 1e-10
    max_iters: int = 100_000
    # float c means x_i(0) = c for all i; an array is used as given
    initial: Union[float, np.ndarray] = 1.0
    threads: int = 1

    def __post_init__(self):
        self.model = ModelKind.parse(self.model)
        self.mode = Mode(self.mode)
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.mode is Mode.OPEN:
            if not (0 < self.r < 1 and self.f > 0):
                raise ValueError("open mode needs 0 < r < 1 and f > 0")
        elif self.r != 1.0 or self.f != 0.0:
            raise ValueError("closed mode uses r = 1 and f = 0")

    def initial_state(self, n: int) -> np.ndarray:
        if np.isscalar(self.initial):
            x = np.full(n, float(self.initial))
        else:
            x = np.array(self.initial, dtype=np.float64)
            if x.shape != (n,):
                raise ValueError(f"initial state has shape {x.shape}, expected ({n},)")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValueError("initial state must be finite and nonnegative")
        return x


@dataclass
class SteadyResult:
    state: np.ndarray
    iterations: int
    change: float
    residual: float
    converged: bool

    @property
    def total(self) -> float:
        return float(self.state.sum())


def _rel_l1(d: np.ndarray, ref: np.ndarray) -> float:
    norm = np.abs(ref).sum()
    diff = np.abs(d).sum()
    if norm == 0:
        return 0.0 if diff == 0 else np.inf
    return float(diff / norm)


def run_to_steady(k: TransitionKernel, cfg: TransportConfig) -> SteadyResult:
    """Iterate until the relative L1 change drops below ``cfg.tolerance``.

    Non-convergence is reported through ``converged=False``; periodic
    strongly connected graphs never settle under closed dynamics.
    """
    if cfg.mode is Mode.CLOSED and not is_strongly_connected(k.graph):
        raise PreconditionError("closed dynamics need a strongly connected graph; extract the LSCC first")
    x = cfg.initial_state(k.n)
    change = np.inf
    it = 0
    while it < cfg.max_iters:
        y = _apply(k, x, cfg.r, cfg.f, cfg.threads)
        it += 1
        change = _rel_l1(y - x, y)
        x = y
        if change < cfg.tolerance:
            break
    residual = _rel_l1(x - _apply(k, x, cfg.r, cfg.f, cfg.threads), x)
    converged = bool(change < cfg.tolerance and residual <= 10 * cfg.tolerance)
    return SteadyResult(x, it, float(change), residual, converged)


def estimate_spectral_radius(k: TransitionKernel, r: float = 1.0, iters: int = 1000,
                             seed=None) -> float:
    """Power-iteration estimate of the spectral radius of r*|Q|.

    Returns the geometric mean growth factor of the L1 norm over the
    second half of the iterations, which tolerates periodic spectra.
    """
    if iters < 10:
        raise ValueError("iters must be >= 10")
    rng = np.random.default_rng(seed)
    mat = abs(k.matrix)
    v = rng.random(k.n) + 0.5
    v /= v.sum()
    log_growth = []
    for _ in range(iters):
        w = mat @ v
        s = w.sum()
        if s == 0:
            return 0.0
        log_growth.append(np.log(s))
        v = w / s
    tail = log_growth[len(log_growth) // 2:]
    return float(r * np.exp(np.mean(tail)))


def calibrate_injection(g: DirectedGraph, model, r: float, total_target: float,
                        tolerance: float = 1e-10, max_iters: int = 100_000,
                        kernel: Optional[TransitionKernel] = None,
                        threads: int = 1) -> tuple[float, SteadyResult]:
    """Injection f whose open steady state sums to ``total_target``.

    The open fixed point x = f (I - rQ)^-1 1 is linear in f, so one solve
    at f = 1 followed by a rescale is exact.
    """
    if not total_target > 0:
        raise ValueError("total_target must be positive")
    if not 0 < r < 1:
        raise ValueError("calibration needs 0 < r < 1")
    kernel = kernel or build_kernel(g, model)
    res = run_to_steady(kernel, TransportConfig(model=kernel.model, mode=Mode.OPEN, r=r, f=1.0,
                                                tolerance=tolerance, max_iters=max_iters,
                                                threads=threads))
    base = res.total
    if not base > 0:
        raise ValueError("steady total at f = 1 is zero; cannot calibrate")
    f = total_target / base
    scaled = SteadyResult(res.state * f, res.iterations, res.change, res.residual, res.converged)
    return f, scaled
