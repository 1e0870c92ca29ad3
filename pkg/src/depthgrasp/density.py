"""Neighborhood density, confidence weights, and confidence ordering.

The density of a point is the self-inclusive count of cloud points within
radius epsilon; confidences are the min-max normalization of those counts to
[0, 1]. Sorting by confidence descending produces the ordered cloud consumed
by progressive plane consensus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from depthgrasp import _kernels
from depthgrasp.depth_io import PointCloud


@dataclass(frozen=True)
class DensityParams:
    epsilon: float  # neighborhood radius, mm

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class OrderedCloud:
    """A cloud with confidences attached plus its confidence-descending order.

    ``order`` is a permutation of 0..N-1; confidences along it never increase.
    """

    cloud: PointCloud
    order: np.ndarray

    def __post_init__(self):
        n = len(self.cloud)
        order = np.asarray(self.order, dtype=np.int64)
        if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
            raise ValueError("order must be a permutation of 0..N-1")
        object.__setattr__(self, "order", order)
        w = self.cloud.confidences
        if w is None:
            raise ValueError("ordered cloud requires confidences")
        if n > 1 and np.any(np.diff(w[order]) > 0):
            raise ValueError("confidences along order must be non-increasing")

    def __len__(self) -> int:
        return len(self.cloud)

    def sorted_points(self) -> np.ndarray:
        return self.cloud.points[self.order]


class GridIndex:
    """Uniform hash grid with cubic cells of the query radius.

    Exact: a radius query inspects the 27-cell neighborhood, so results equal
    a brute-force pairwise scan bit for bit (same float64 arithmetic).
    """

    def __init__(self, points: np.ndarray, cell_size: float):
        if not cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        points = np.asarray(points, dtype=np.float64)
        self.cell_size = float(cell_size)
        self.n = len(points)
        cells = np.floor(points / cell_size).astype(np.int64) + _kernels.KEY_BIAS
        if self.n and (cells.min() < 1 or cells.max() > (1 << _kernels.KEY_BITS) - 2):
            raise ValueError("coordinates exceed the grid's addressable range")
        keys = (
            (cells[:, 0] << (2 * _kernels.KEY_BITS))
            | (cells[:, 1] << _kernels.KEY_BITS)
            | cells[:, 2]
        )
        self.order = np.argsort(keys, kind="stable")
        skeys = keys[self.order]
        self.ukeys, starts = np.unique(skeys, return_index=True)
        self.starts = starts.astype(np.int64)
        self.ends = np.append(self.starts[1:], self.n)
        sp = points[self.order]
        self.xs = np.ascontiguousarray(sp[:, 0])
        self.ys = np.ascontiguousarray(sp[:, 1])
        self.zs = np.ascontiguousarray(sp[:, 2])

    def radius_counts(self) -> np.ndarray:
        """Self-inclusive neighbor counts within cell_size, in original order."""
        counts_sorted = _kernels.radius_counts(
            self.xs, self.ys, self.zs, self.ukeys, self.starts, self.ends,
            self.cell_size * self.cell_size,
        )
        out = np.empty(self.n, dtype=np.int64)
        out[self.order] = counts_sorted
        return out


def neighborhood_density(cloud: PointCloud, params: DensityParams) -> np.ndarray:
    """Exact per-point neighbor counts |{j : ||p_i - p_j|| <= epsilon}|.

    Counts include the point itself, so every entry is >= 1.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    return GridIndex(cloud.points, params.epsilon).radius_counts()


def neighborhood_density_bruteforce(cloud: PointCloud, params: DensityParams) -> np.ndarray:
    """O(N^2) reference for the grid index; exact same comparison arithmetic."""
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    p = cloud.points
    d2 = (
        (p[:, None, 0] - p[None, :, 0]) ** 2
        + (p[:, None, 1] - p[None, :, 1]) ** 2
        + (p[:, None, 2] - p[None, :, 2]) ** 2
    )
    return (d2 <= params.epsilon * params.epsilon).sum(axis=1)


def confidence_weights(densities: np.ndarray) -> np.ndarray:
    """Min-max normalize densities: w = (rho - rho_min) / (rho_max - rho_min).

    When all densities are equal the normalization is degenerate; every point
    is then equally trustworthy and all weights are defined as 1.
    """
    rho = np.asarray(densities, dtype=np.float64)
    if rho.size == 0:
        raise ValueError("empty density list")
    lo, hi = rho.min(), rho.max()
    if hi == lo:
        return np.ones_like(rho)
    return (rho - lo) / (hi - lo)


def sort_by_confidence(cloud: PointCloud, w: np.ndarray) -> OrderedCloud:
    """Order the cloud by confidence descending, ties by ascending index."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (len(cloud),):
        raise ValueError(f"weights length {w.shape} != point count {len(cloud)}")
    order = np.argsort(-w, kind="stable")
    annotated = PointCloud(cloud.points, densities=cloud.densities, confidences=w)
    return OrderedCloud(cloud=annotated, order=order)
