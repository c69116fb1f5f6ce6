"""Numba kernels for edge-swap moves on a mutable edge list.

Edges are encoded as ``src * n + dst`` and kept in an open-addressing
hash set (linear probing, backward-shift deletion) so that simplicity
checks cost O(1).  Random draws are generated outside the kernels with
numpy's PCG64 and streamed in chunks, which keeps results reproducible
across numba versions.
"""
import numpy as np
from numba import njit

EMPTY = -1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True)
def _slot(key, mask):
    h = np.uint64(key) * _GOLDEN
    return np.int64(h >> np.uint64(20)) & mask


@njit(cache=True)
def table_new(n_items):
    cap = 16
    while cap < 2 * n_items + 16:
        cap *= 2
    return np.full(cap, EMPTY, dtype=np.int64)


@njit(cache=True)
def table_contains(table, key):
    mask = table.size - 1
    i = _slot(key, mask)
    while True:
        k = table[i]
        if k == EMPTY:
            return False
        if k == key:
            return True
        i = (i + 1) & mask


@njit(cache=True)
def table_insert(table, key):
    mask = table.size - 1
    i = _slot(key, mask)
    while True:
        k = table[i]
        if k == EMPTY:
            table[i] = key
            return True
        if k == key:
            return False
        i = (i + 1) & mask


@njit(cache=True)
def table_remove(table, key):
    mask = table.size - 1
    i = _slot(key, mask)
    while True:
        k = table[i]
        if k == EMPTY:
            return False
        if k == key:
            break
        i = (i + 1) & mask
    # backward-shift deletion keeps probe chains intact
    j = i
    while True:
        j = (j + 1) & mask
        k = table[j]
        if k == EMPTY:
            break
        home = _slot(k, mask)
        # move k into hole i unless its home lies cyclically in (i, j]
        if (j > i and (home <= i or home > j)) or (j < i and (home <= i and home > j)):
            table[i] = k
            i = j
    table[i] = EMPTY
    return True


@njit(cache=True)
def table_build(src, dst, n):
    table = table_new(src.size)
    for e in range(src.size):
        table_insert(table, src[e] * n + dst[e])
    return table


@njit(cache=True)
def _try_swap(src, dst, table, n, e1, e2):
    x1 = src[e1]
    y1 = dst[e1]
    x2 = src[e2]
    y2 = dst[e2]
    if x1 == y2 or x2 == y1:
        return False
    k12 = x1 * n + y2
    k21 = x2 * n + y1
    if table_contains(table, k12) or table_contains(table, k21):
        return False
    table_remove(table, x1 * n + y1)
    table_remove(table, x2 * n + y2)
    table_insert(table, k12)
    table_insert(table, k21)
    dst[e1] = y2
    dst[e2] = y1
    return True


@njit(cache=True)
def shuffle_chunk(src, dst, table, n, picks1, picks2):
    """Attempt one swap per pick pair; returns the number accepted."""
    accepted = 0
    for t in range(picks1.size):
        e1 = picks1[t]
        e2 = picks2[t]
        if e1 == e2:
            continue
        if _try_swap(src, dst, table, n, e1, e2):
            accepted += 1
    return accepted


@njit(cache=True)
def rewire_chunk(src, dst, table, n, a, b, picks1, picks2, cross, mu, sd, target, stop_tol):
    """Greedy swaps that move the edge-wise Pearson correlation toward ``target``.

    ``a``/``b`` are k_out/k_in per node, ``cross`` the running sum of
    a[src]*b[dst] over edges.  Returns (attempts used, accepted, cross).
    """
    m = src.size
    accepted = 0
    for t in range(picks1.size):
        rho = (cross / m - mu) / sd
        if abs(rho - target) < stop_tol:
            return t, accepted, cross
        e1 = picks1[t]
        e2 = picks2[t]
        if e1 == e2:
            continue
        a1 = a[src[e1]]
        a2 = a[src[e2]]
        b1 = b[dst[e1]]
        b2 = b[dst[e2]]
        delta = -(a1 - a2) * (b1 - b2)
        if delta == 0:
            continue
        new_rho = ((cross + delta) / m - mu) / sd
        if abs(new_rho - target) >= abs(rho - target):
            continue
        if _try_swap(src, dst, table, n, e1, e2):
            cross += delta
            accepted += 1
    return picks1.size, accepted, cross


@njit(cache=True)
def place_pairs(src, dst, n, table, good):
    """Insert stub pairs in order; flags self-loops and repeats as bad."""
    for e in range(src.size):
        if src[e] == dst[e]:
            good[e] = False
        else:
            good[e] = table_insert(table, src[e] * n + dst[e])


@njit(cache=True)
def rematch_chunk(src, dst, n, table, good, bad_ids, draws, attempts):
    """Re-match each bad pair by swapping destinations with random pairs.

    ``draws`` holds ``attempts`` uniform floats per bad pair.  A swap
    that makes both pairs simple fixes the bad pair.  A swap that makes
    only the bad pair simple hands the collision to the partner, which
    then continues on the remaining attempts; the count of bad pairs
    never grows.  Failures stay bad.
    """
    m = src.size
    for t in range(bad_ids.size):
        e1 = bad_ids[t]
        if good[e1]:
            continue  # repaired earlier as someone's partner
        for s in range(attempts):
            x1 = src[e1]
            y1 = dst[e1]
            # a duplicate turns valid once its twin has been moved away
            if x1 != y1 and table_insert(table, x1 * n + y1):
                good[e1] = True
                break
            e2 = np.int64(draws[t * attempts + s] * m)
            if e2 >= m:
                e2 = m - 1
            x2 = src[e2]
            y2 = dst[e2]
            if e2 == e1 or x1 == x2 or x1 == y2:
                continue
            k12 = x1 * n + y2
            k21 = x2 * n + y1
            if table_contains(table, k12):
                continue
            ok21 = x2 != y1 and not table_contains(table, k21)
            if not ok21 and not good[e2]:
                continue
            if good[e2]:
                table_remove(table, x2 * n + y2)
            table_insert(table, k12)
            dst[e1] = y2
            dst[e2] = y1
            good[e1] = True
            if ok21:
                table_insert(table, k21)
                good[e2] = True
                break
            good[e2] = False
            e1 = e2
        if not good[e1] and src[e1] != dst[e1] and table_insert(table, src[e1] * n + dst[e1]):
            good[e1] = True
    return 0
