"""Empirical statistics: CCDFs, tail exponents, neighbor-degree curves,
log-binned conditional means and weighted neighbor sums.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .graph import DirectedGraph

DEFAULT_BINS_PER_DECADE = 5
DEFAULT_MIN_COUNT = 10
MODE_SUBBINS = 20


class FitMethod(enum.Enum):
    HILL = "hill"
    RANK_REGRESSION = "rank"


@dataclass(frozen=True)
class CCDFCurve:
    values: np.ndarray
    fraction: np.ndarray  # P(X >= value)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    tail_fraction: float
    x_min: float
    method: FitMethod
    n_tail: int


def ccdf(values) -> CCDFCurve:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise ValueError("need at least one finite value")
    uniq, counts = np.unique(v, return_counts=True)
    # number of samples >= uniq[j]
    at_least = np.cumsum(counts[::-1])[::-1]
    return CCDFCurve(uniq, at_least / v.size)


def _discrete_tail_mle(tail: np.ndarray, x_min: float) -> float:
    """MLE of alpha for integer data with P(K >= k) = (k / x_min)**-alpha."""
    lk = np.log(tail / x_min)
    gap = np.log1p(1.0 / tail)  # log((k + 1) / k)

    def nll(alpha):
        return -(np.sum(-alpha * lk) + np.sum(np.log(-np.expm1(-alpha * gap))))

    res = optimize.minimize_scalar(nll, bounds=(1e-3, 50.0), method="bounded",
                                   options={"xatol": 1e-10})
    return float(res.x)


def fit_tail_exponent(values, method: FitMethod | str = FitMethod.HILL,
                      tail_fraction: float = 0.1, discrete: bool | None = None) -> PowerLawFit:
    """Estimate alpha in P(X >= x) ~ x**-alpha from the largest values.

    Hill uses the top k = ceil(n * tail_fraction) order statistics with
    the (k+1)-th largest as threshold.  Rank regression fits the
    log-CCDF against log-value at every sample in the same tail.

    Integer data (auto-detected unless ``discrete`` is given) gets the
    exact likelihood of floored Pareto values instead of Hill: the tail is
    every sample >= the k-th largest value, which keeps ties together.
    """
    method = FitMethod(method)
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())[::-1]
    n = v.size
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    if not 0 < tail_fraction <= 0.5:
        raise ValueError("tail_fraction must lie in (0, 0.5]")
    k = int(np.ceil(n * tail_fraction))
    if k < 10:
        raise ValueError(f"only {k} samples in the tail; need at least 10")
    if discrete is None:
        discrete = bool(np.all(v == np.floor(v)))

    if discrete:
        x_min = v[k - 1]
        top = v[v >= x_min]
    else:
        x_min = v[k]
        top = v[:k]
    if not x_min > 0:
        raise ValueError("tail threshold must be positive")

    if method is FitMethod.HILL:
        if discrete:
            alpha = _discrete_tail_mle(top, x_min)
        else:
            s = np.log(top / x_min).sum()
            if s <= 0:
                raise ValueError("tail is degenerate (all values equal)")
            alpha = top.size / s
    else:
        if top[0] == top[-1]:
            raise ValueError("tail is degenerate (all values equal)")
        # P(X >= v_i) counts every sample tied with v_i
        ranks = np.searchsorted(-v, -top, side="right")
        slope = np.polyfit(np.log(top), np.log(ranks / n), 1)[0]
        alpha = -slope
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError("fit produced a non-positive exponent")
    return PowerLawFit(float(alpha), tail_fraction, float(x_min), method, int(top.size))


@dataclass(frozen=True)
class BinnedConditional:
    """Per-bin summaries of y given x; stats are NaN below ``min_count``.

    A bin with ``lo == hi == 0`` collects x == 0 samples.
    """
    lo: np.ndarray
    hi: np.ndarray
    center: np.ndarray   # geometric center of the bin edges
    x_gmean: np.ndarray  # geometric mean of the x samples in the bin
    mean: np.ndarray
    count: np.ndarray
    p05: np.ndarray
    p95: np.ndarray
    mode: np.ndarray
    min_count: int

    def rows(self):
        for j in range(self.count.size):
            yield (self.center[j], self.mean[j], int(self.count[j]), self.p05[j], self.p95[j], self.mode[j])


def _log_mode(y: np.ndarray) -> float:
    y = y[y > 0]
    if y.size == 0:
        return float("nan")
    ly = np.log10(y)
    lo, hi = ly.min(), ly.max()
    if hi == lo:
        return float(y[0])
    hist, edges = np.histogram(ly, bins=MODE_SUBBINS, range=(lo, hi))
    j = int(np.argmax(hist))
    return float(10 ** (0.5 * (edges[j] + edges[j + 1])))


def conditional_mean_log_binned(x, y, bins_per_decade: int = DEFAULT_BINS_PER_DECADE,
                                min_count: int = DEFAULT_MIN_COUNT) -> BinnedConditional:
    """Conditional mean of y given x over logarithmic x-bins.

    Bin edges sit at 10**(j / bins_per_decade); bins are half-open
    [lo, hi).  Negative x values are rejected.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"x and y differ in length ({x.size} vs {y.size})")
    if np.any(x < 0):
        raise ValueError("x must be nonnegative for log binning")
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")

    zero = x == 0
    groups = []
    if zero.any():
        groups.append((0.0, 0.0, zero))
    pos = ~zero
    if pos.any():
        lx = np.log10(x[pos])
        # tiny nudge keeps exact powers of 10**(1/bpd) in their own bin
        bidx = np.floor(lx * bins_per_decade + 1e-9).astype(np.int64)
        ids = np.flatnonzero(pos)
        for b in np.unique(bidx):
            mask = np.zeros(x.size, dtype=bool)
            mask[ids[bidx == b]] = True
            groups.append((10 ** (b / bins_per_decade), 10 ** ((b + 1) / bins_per_decade), mask))

    n = len(groups)
    out = {name: np.full(n, np.nan) for name in ("lo", "hi", "center", "x_gmean", "mean", "p05", "p95", "mode")}
    count = np.zeros(n, dtype=np.int64)
    for j, (lo, hi, mask) in enumerate(groups):
        xs, ys = x[mask], y[mask]
        out["lo"][j], out["hi"][j] = lo, hi
        out["center"][j] = np.sqrt(lo * hi)
        out["x_gmean"][j] = np.exp(np.log(xs).mean()) if lo > 0 else 0.0
        count[j] = ys.size
        if ys.size >= min_count:
            out["mean"][j] = ys.mean()
            out["p05"][j], out["p95"][j] = np.percentile(ys, [5, 95])
            out["mode"][j] = _log_mode(ys)
    return BinnedConditional(count=count, min_count=min_count, **out)


def loglog_slope(curve: BinnedConditional, x_lo: float = 0.0, x_hi: float = np.inf,
                 use_center: bool = False) -> float:
    """Least-squares slope of log mean vs log x over occupied positive bins."""
    xs = curve.center if use_center else curve.x_gmean
    ok = np.isfinite(curve.mean) & (curve.mean > 0) & (xs > 0) & (xs >= x_lo) & (xs <= x_hi)
    if ok.sum() < 2:
        raise ValueError("need at least two occupied bins to fit a slope")
    return float(np.polyfit(np.log(xs[ok]), np.log(curve.mean[ok]), 1)[0])


def degree_vector(g: DirectedGraph, kind: str) -> np.ndarray:
    if kind == "in":
        return g.in_degree
    if kind == "out":
        return g.out_degree
    if kind == "total":
        return g.in_degree + g.out_degree
    raise ValueError(f"unknown degree kind {kind!r}")


def node_knn(g: DirectedGraph, degree_kind: str = "total", neighbors: str = "both") -> np.ndarray:
    """Mean ``degree_kind`` degree over each node's neighbors (NaN if none).

    ``neighbors`` picks out-neighbors, in-neighbors, or both (a reciprocal
    pair then counts twice, consistent with the total degree).
    """
    deg = degree_vector(g, degree_kind).astype(np.float64)
    src, dst = g.edges()
    acc = np.zeros(g.n)
    cnt = np.zeros(g.n)
    if neighbors in ("out", "both"):
        acc += np.bincount(src, weights=deg[dst], minlength=g.n)
        cnt += g.out_degree
    if neighbors in ("in", "both"):
        acc += np.bincount(dst, weights=deg[src], minlength=g.n)
        cnt += g.in_degree
    if neighbors not in ("out", "in", "both"):
        raise ValueError(f"unknown neighbor direction {neighbors!r}")
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, acc / cnt, np.nan)


def knn_curve(g: DirectedGraph, degree_kind: str = "total", neighbors: str = "both",
              bins_per_decade: int = DEFAULT_BINS_PER_DECADE,
              min_count: int = DEFAULT_MIN_COUNT) -> BinnedConditional:
    """k_nn(k) binned in k; isolated nodes are skipped."""
    if g.n == 0:
        raise ValueError("graph is empty")
    knn = node_knn(g, degree_kind, neighbors)
    k = degree_vector(g, degree_kind)
    ok = np.isfinite(knn) & (k > 0)
    return conditional_mean_log_binned(k[ok], knn[ok], bins_per_decade, min_count)


def weighted_neighbor_sums(g: DirectedGraph, s) -> tuple[np.ndarray, np.ndarray]:
    """Customer-sales sums received by each node.

    s1[m] = sum over customers i of s_i / k_out(i)
    s2[m] = sum over customers i of s_i * k_in(m) / sum_{j in out(i)} k_in(j)
    """
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (g.n,):
        raise ValueError(f"s has shape {s.shape}, expected ({g.n},)")
    src, dst = g.edges()
    k_out = g.out_degree.astype(np.float64)
    k_in = g.in_degree.astype(np.float64)
    s1 = np.bincount(dst, weights=s[src] / k_out[src], minlength=g.n)
    reach = np.bincount(src, weights=k_in[dst], minlength=g.n)
    s2 = np.bincount(dst, weights=s[src] * k_in[dst] / reach[src], minlength=g.n)
    return s1, s2


@dataclass(frozen=True)
class ExponentIdentity:
    alpha_in: float
    alpha_s: float
    predicted_beta: float
    measured_beta: float
    relative_discrepancy: float


def exponent_identity_check(alpha_in: float, alpha_s: float, beta_measured: float) -> ExponentIdentity:
    """Compare a measured <s>_k slope with the change-of-variables
    prediction beta = alpha_in / alpha_s."""
    if min(alpha_in, alpha_s, beta_measured) <= 0:
        raise ValueError("exponents must be positive")
    pred = alpha_in / alpha_s
    return ExponentIdentity(alpha_in, alpha_s, pred, beta_measured, abs(beta_measured - pred) / pred)
