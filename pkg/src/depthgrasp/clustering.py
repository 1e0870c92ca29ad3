"""Density-based clustering of the off-plane cloud into objects plus noise.

A core point has at least mu neighbors within epsilon (self-inclusive, the
same counting rule as the density module). Core points chained by epsilon
reachability share a cluster; a non-core point within epsilon of a core
becomes a border point of the nearest such core's cluster (ties by smallest
point index); everything else is noise, labeled -1. Cluster labels are
canonical: clusters are numbered 0..K-1 by their smallest member index, so
results are comparable across input orderings.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from depthgrasp import _kernels
from depthgrasp.density import GridIndex
from depthgrasp.depth_io import PointCloud

REFERENCE_MAX_POINTS = 2000


class PointKind(IntEnum):
    CORE = 0
    BORDER = 1
    NOISE = 2


@dataclass(frozen=True)
class ClusterParams:
    epsilon: float  # clustering radius, mm
    mu: int  # minimum self-inclusive neighbor count for a core point

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.mu < 1:
            raise ValueError(f"mu must be >= 1, got {self.mu}")


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-point labels (-1 noise, else 0..k-1) and point kinds."""

    labels: np.ndarray
    k: int
    kinds: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        kinds = np.asarray(self.kinds, dtype=np.int8)
        if labels.shape != kinds.shape:
            raise ValueError("labels and kinds must be parallel")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "kinds", kinds)
        if labels.size:
            if labels.min() < -1 or labels.max() >= self.k:
                raise ValueError(f"labels must lie in [-1, {self.k})")
            if not np.array_equal(labels == -1, kinds == PointKind.NOISE):
                raise ValueError("label -1 must coincide with noise kind")
            present = np.unique(labels[labels >= 0])
            if len(present) != self.k:
                raise ValueError(f"expected {self.k} distinct cluster labels, got {len(present)}")
        elif self.k != 0:
            raise ValueError("empty assignment must have k = 0")

    def __len__(self) -> int:
        return len(self.labels)


def _empty_assignment() -> ClusterAssignment:
    return ClusterAssignment(
        labels=np.empty(0, dtype=np.int64), k=0, kinds=np.empty(0, dtype=np.int8)
    )


def _resolve_roots(parent: np.ndarray) -> np.ndarray:
    # pointer jumping until every entry points at its component root
    root = parent.copy()
    while True:
        nxt = root[root]
        if np.array_equal(nxt, root):
            return root
        root = nxt


def _canonical_labels(comp: np.ndarray, n: int) -> tuple[np.ndarray, int]:
    """Renumber component ids (-1 = none) as 0..K-1 by smallest member index."""
    member = comp >= 0
    labels = np.full(n, -1, dtype=np.int64)
    if not member.any():
        return labels, 0
    min_idx = np.full(n, n, dtype=np.int64)
    np.minimum.at(min_idx, comp[member], np.flatnonzero(member))
    comp_ids = np.unique(comp[member])
    relabel = np.empty(n, dtype=np.int64)
    relabel[comp_ids[np.argsort(min_idx[comp_ids], kind="stable")]] = np.arange(len(comp_ids))
    labels[member] = relabel[comp[member]]
    return labels, len(comp_ids)


def dbscan(h: PointCloud, params: ClusterParams) -> ClusterAssignment:
    """Cluster the cloud using the grid index for epsilon queries."""
    n = len(h)
    if n == 0:
        return _empty_assignment()
    grid = GridIndex(h.points, params.epsilon)
    eps2 = params.epsilon * params.epsilon
    counts = _kernels.radius_counts(
        grid.xs, grid.ys, grid.zs, grid.ukeys, grid.starts, grid.ends, eps2
    )
    is_core = counts >= params.mu
    parent = _kernels.core_components(
        grid.xs, grid.ys, grid.zs, grid.ukeys, grid.starts, grid.ends, is_core, eps2
    )
    nearest = _kernels.nearest_core(
        grid.xs, grid.ys, grid.zs, grid.ukeys, grid.starts, grid.ends,
        is_core, grid.order, eps2,
    )
    root = _resolve_roots(parent)

    # component ids in the sorted domain keyed by the ORIGINAL index of each
    # component's smallest member, so relabeling is ordering-independent
    comp_sorted = np.full(n, -1, dtype=np.int64)
    comp_sorted[is_core] = root[is_core]
    border = ~is_core & (nearest >= 0)
    comp_sorted[border] = root[nearest[border]]

    comp_orig = np.full(n, -1, dtype=np.int64)
    comp_orig[grid.order] = comp_sorted
    labels, k = _canonical_labels(comp_orig, n)

    kinds = np.full(n, int(PointKind.NOISE), dtype=np.int8)
    kinds_sorted = np.full(n, int(PointKind.NOISE), dtype=np.int8)
    kinds_sorted[border] = PointKind.BORDER
    kinds_sorted[is_core] = PointKind.CORE
    kinds[grid.order] = kinds_sorted
    return ClusterAssignment(labels=labels, k=k, kinds=kinds)


def dbscan_reference(h: PointCloud, params: ClusterParams) -> ClusterAssignment:
    """Exhaustive O(N^2) DBSCAN with the same deterministic tie rules.

    Independent of the grid path; used as the correctness oracle in tests.
    Guarded to small clouds.
    """
    n = len(h)
    if n > REFERENCE_MAX_POINTS:
        raise ValueError(f"reference oracle limited to {REFERENCE_MAX_POINTS} points, got {n}")
    if n == 0:
        return _empty_assignment()
    p = h.points
    d2 = (
        (p[:, None, 0] - p[None, :, 0]) ** 2
        + (p[:, None, 1] - p[None, :, 1]) ** 2
        + (p[:, None, 2] - p[None, :, 2]) ** 2
    )
    eps2 = params.epsilon * params.epsilon
    within = d2 <= eps2
    is_core = within.sum(axis=1) >= params.mu

    comp = np.full(n, -1, dtype=np.int64)
    for seed in range(n):
        if not is_core[seed] or comp[seed] >= 0:
            continue
        comp[seed] = seed
        stack = [seed]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(within[i] & is_core):
                if comp[j] < 0:
                    comp[j] = seed
                    stack.append(int(j))

    core_idx = np.flatnonzero(is_core)
    for i in np.flatnonzero(~is_core):
        if core_idx.size == 0:
            break
        dcore = d2[i, core_idx]
        reachable = dcore <= eps2
        if not reachable.any():
            continue
        best = dcore[reachable].min()
        # nearest core; ties by smallest point index (core_idx is ascending)
        j = core_idx[reachable][dcore[reachable] == best][0]
        comp[i] = comp[j]

    labels = np.full(n, -1, dtype=np.int64)
    member = comp >= 0
    k = 0
    if member.any():
        min_idx = {}
        for i in np.flatnonzero(member):
            c = comp[i]
            if c not in min_idx or i < min_idx[c]:
                min_idx[c] = i
        ordered = sorted(min_idx, key=lambda c: min_idx[c])
        renum = {c: new for new, c in enumerate(ordered)}
        for i in np.flatnonzero(member):
            labels[i] = renum[comp[i]]
        k = len(ordered)

    kinds = np.full(n, int(PointKind.NOISE), dtype=np.int8)
    kinds[member & ~is_core] = PointKind.BORDER
    kinds[is_core] = PointKind.CORE
    return ClusterAssignment(labels=labels, k=k, kinds=kinds)
