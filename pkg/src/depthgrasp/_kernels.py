"""Compiled inner loops for the uniform hash-grid index.

Points are bucketed into cubic cells of the query radius and sorted by a
packed 63-bit cell key (21 bits per axis, biased to stay non-negative).
Because z occupies the low bits, the three z-adjacent cells of any (x, y)
column are contiguous in the sorted order, so a radius query touches the
27-cell neighborhood as 9 contiguous index ranges.

All distance comparisons use squared float64 distances with the expression
(dx*dx + dy*dy) + dz*dz, matching the numpy brute-force oracles bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

KEY_BITS = 21
KEY_BIAS = 1 << 20

# column offsets (dx, dy) of the 3x3 neighborhood, as packed key deltas
COLUMN_DELTAS = np.array(
    [(dx << (2 * KEY_BITS)) + (dy << KEY_BITS) for dx in (-1, 0, 1) for dy in (-1, 0, 1)],
    dtype=np.int64,
)

# key deltas of the 13 lexicographically positive offsets, grouped for the
# pair-visiting union pass: the four columns with (dx, dy) > (0, 0) span all
# three dz values; the (0, 0) column contributes only dz = +1
POSITIVE_COLUMN_DELTAS = np.array(
    [(0 << (2 * KEY_BITS)) + (1 << KEY_BITS)]
    + [(1 << (2 * KEY_BITS)) + (dy << KEY_BITS) for dy in (-1, 0, 1)],
    dtype=np.int64,
)


@njit(cache=True, inline="always")
def _lower_bound(keys, key):
    lo, hi = 0, keys.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, inline="always")
def _upper_bound(keys, key):
    lo, hi = 0, keys.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] <= key:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _column_ranges(ukeys, starts, ends, key, rs, re):
    """Collect the <= 9 contiguous sorted-index ranges covering the 27 cells."""
    nr = 0
    for d in range(9):
        base = key + COLUMN_DELTAS[d]
        a = _lower_bound(ukeys, base - 1)
        b = _upper_bound(ukeys, base + 1)
        if a < b:
            rs[nr] = starts[a]
            re[nr] = ends[b - 1]
            nr += 1
    return nr


@njit(cache=True)
def radius_counts(xs, ys, zs, ukeys, starts, ends, eps2):
    """Self-inclusive count of points within sqrt(eps2) of each point."""
    n = xs.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    rs = np.empty(9, dtype=np.int64)
    re = np.empty(9, dtype=np.int64)
    for g in range(ukeys.shape[0]):
        nr = _column_ranges(ukeys, starts, ends, ukeys[g], rs, re)
        for i in range(starts[g], ends[g]):
            xi, yi, zi = xs[i], ys[i], zs[i]
            c = 0
            for r in range(nr):
                for j in range(rs[r], re[r]):
                    dx = xi - xs[j]
                    dy = yi - ys[j]
                    dz = zi - zs[j]
                    c += (dx * dx + dy * dy) + dz * dz <= eps2
            counts[i] = c
    return counts


@njit(cache=True, inline="always")
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:  # path compression
        parent[i], i = root, parent[i]
    return root


@njit(cache=True)
def core_components(xs, ys, zs, ukeys, starts, ends, is_core, eps2):
    """Union-find over core points: connect cores within the radius.

    Each unordered pair is visited once: same-cell pairs with i < j, plus
    cross-cell pairs toward lexicographically positive neighbor cells.
    Returns the parent array (sorted-domain indices; non-core entries are
    self-parented and meaningless).
    """
    n = xs.shape[0]
    parent = np.arange(n, dtype=np.int64)
    for g in range(ukeys.shape[0]):
        s0, e0 = starts[g], ends[g]
        key = ukeys[g]
        for i in range(s0, e0):
            if not is_core[i]:
                continue
            xi, yi, zi = xs[i], ys[i], zs[i]
            for j in range(i + 1, e0):
                if not is_core[j]:
                    continue
                dx = xi - xs[j]
                dy = yi - ys[j]
                dz = zi - zs[j]
                if (dx * dx + dy * dy) + dz * dz <= eps2:
                    ri = _find(parent, i)
                    rj = _find(parent, j)
                    if ri != rj:
                        parent[rj] = ri
        # (0, 0, +1) neighbor cell alone
        a = _lower_bound(ukeys, key + 1)
        if a < ukeys.shape[0] and ukeys[a] == key + 1:
            s1, e1 = starts[a], ends[a]
            _union_ranges(xs, ys, zs, is_core, parent, s0, e0, s1, e1, eps2)
        # the four positive (dx, dy) columns, all three dz cells merged
        for d in range(4):
            base = key + POSITIVE_COLUMN_DELTAS[d]
            a = _lower_bound(ukeys, base - 1)
            b = _upper_bound(ukeys, base + 1)
            if a < b:
                _union_ranges(xs, ys, zs, is_core, parent, s0, e0, starts[a], ends[b - 1], eps2)
    return parent


@njit(cache=True, inline="always")
def _union_ranges(xs, ys, zs, is_core, parent, s0, e0, s1, e1, eps2):
    for i in range(s0, e0):
        if not is_core[i]:
            continue
        xi, yi, zi = xs[i], ys[i], zs[i]
        for j in range(s1, e1):
            if not is_core[j]:
                continue
            dx = xi - xs[j]
            dy = yi - ys[j]
            dz = zi - zs[j]
            if (dx * dx + dy * dy) + dz * dz <= eps2:
                ri = _find(parent, i)
                rj = _find(parent, j)
                if ri != rj:
                    parent[rj] = ri


@njit(cache=True)
def nearest_core(xs, ys, zs, ukeys, starts, ends, is_core, orig_idx, eps2):
    """For each non-core point, the sorted index of the nearest core point
    within the radius (ties by smallest original point index), else -1."""
    n = xs.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    rs = np.empty(9, dtype=np.int64)
    re = np.empty(9, dtype=np.int64)
    for g in range(ukeys.shape[0]):
        nr = _column_ranges(ukeys, starts, ends, ukeys[g], rs, re)
        for i in range(starts[g], ends[g]):
            if is_core[i]:
                continue
            xi, yi, zi = xs[i], ys[i], zs[i]
            best_d2 = np.inf
            best_orig = -1
            best_j = -1
            for r in range(nr):
                for j in range(rs[r], re[r]):
                    if not is_core[j]:
                        continue
                    dx = xi - xs[j]
                    dy = yi - ys[j]
                    dz = zi - zs[j]
                    d2 = (dx * dx + dy * dy) + dz * dz
                    if d2 <= eps2:
                        oj = orig_idx[j]
                        if d2 < best_d2 or (d2 == best_d2 and oj < best_orig):
                            best_d2 = d2
                            best_orig = oj
                            best_j = j
            out[i] = best_j
    return out
