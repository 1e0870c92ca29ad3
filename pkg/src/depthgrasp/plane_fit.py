"""Progressive sample consensus for the dominant plane.

Candidate planes are fit from triples drawn from the top m(n) points of the
confidence-ordered cloud, where the sampling range grows by one point per
iteration: m(n) = min(N, m0 + n). Support is always counted over the full
cloud; the model with maximum support wins. Removing its inliers yields the
off-plane object cloud.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from depthgrasp.density import OrderedCloud
from depthgrasp.depth_io import Point3, PointCloud

COLLINEAR_NORM_EPS = 1e-9  # mm^2, cross-product norm below this is degenerate


class CollinearTriple(ValueError):
    """The sampled triple spans no plane; the caller should resample."""


class ConsensusError(RuntimeError):
    """No plane with minimal support was found within the iteration budget."""


@dataclass(frozen=True)
class PlaneModel:
    """Plane a*x + b*y + c*z + d = 0 with (a, b, c) a unit normal.

    ``support`` is the inlier count I of the consensus run that produced the
    model (0 for planes constructed directly from a triple).
    """

    a: float
    b: float
    c: float
    d: float
    support: int = 0

    def __post_init__(self):
        norm2 = self.a * self.a + self.b * self.b + self.c * self.c
        if abs(norm2 - 1.0) > 1e-9:
            raise ValueError(f"normal must be unit length, got |n|^2 = {norm2}")

    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


@dataclass(frozen=True)
class ProsacParams:
    """Consensus controls.

    m0 = None picks max(3, N // 20) at fit time. ``seed`` feeds a PCG64
    generator so runs are bit-reproducible.
    """

    m0: int | None = None
    delta: float = 8.0  # inlier distance threshold, mm
    min_support_fraction: float = 0.30
    max_iterations: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.m0 is not None and self.m0 < 3:
            raise ValueError(f"m0 must be >= 3, got {self.m0}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0 < self.min_support_fraction <= 1:
            raise ValueError(
                f"min_support_fraction must be in (0, 1], got {self.min_support_fraction}"
            )
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


class PlaneFit(NamedTuple):
    model: PlaneModel
    inliers: np.ndarray  # original-order indices with distance <= delta
    iterations: int  # consensus iterations consumed


def plane_from_three_points(pa: Point3, pb: Point3, pc: Point3) -> PlaneModel:
    """Plane through three points via the cross product (pb-pa) x (pc-pa)."""
    pa = np.asarray(pa, dtype=np.float64)
    normal = np.cross(np.asarray(pb, dtype=np.float64) - pa,
                      np.asarray(pc, dtype=np.float64) - pa)
    norm = float(np.linalg.norm(normal))
    if norm <= COLLINEAR_NORM_EPS:
        raise CollinearTriple(f"triple is collinear (cross norm {norm:.3e})")
    a, b, c = normal / norm
    d = -float(a * pa[0] + b * pa[1] + c * pa[2])
    return PlaneModel(a=float(a), b=float(b), c=float(c), d=d)


def point_plane_distance(p: Point3, plane: PlaneModel) -> float:
    """|a*x + b*y + c*z + d|; the unit normal makes the denominator 1."""
    return abs(plane.a * float(p[0]) + plane.b * float(p[1]) + plane.c * float(p[2]) + plane.d)


def plane_distances(points: np.ndarray, plane: PlaneModel) -> np.ndarray:
    """Vectorized point-plane distances for an (N, 3) array."""
    return np.abs(
        plane.a * points[:, 0] + plane.b * points[:, 1] + plane.c * points[:, 2] + plane.d
    )


def fit_plane_prosac(ordered: OrderedCloud, params: ProsacParams) -> PlaneFit:
    """Find the maximum-support plane by progressive triple sampling.

    Iteration n draws 3 distinct points uniformly from the first
    min(N, m0 + n) entries of the confidence ordering. The loop stops as soon
    as some model's full-cloud support reaches min_support_fraction * N, or
    after max_iterations, returning the best model seen. Collinear triples
    consume an iteration but never the best-model slot.
    """
    n = len(ordered)
    if n < 3:
        raise ValueError(f"plane consensus needs at least 3 points, got {n}")
    m0 = params.m0 if params.m0 is not None else max(3, n // 20)
    m0 = min(m0, n)
    pts_ordered = ordered.sorted_points()
    pts = ordered.cloud.points
    xs = np.ascontiguousarray(pts[:, 0])
    ys = np.ascontiguousarray(pts[:, 1])
    zs = np.ascontiguousarray(pts[:, 2])

    rng = np.random.Generator(np.random.PCG64(params.seed))
    target = params.min_support_fraction * n
    best: PlaneModel | None = None
    best_support = 0
    iterations = 0
    for it in range(params.max_iterations):
        iterations = it + 1
        m = min(n, m0 + it)
        idx = rng.choice(m, size=3, replace=False)
        try:
            model = plane_from_three_points(*pts_ordered[idx])
        except CollinearTriple:
            continue
        dist = np.abs(model.a * xs + model.b * ys + model.c * zs + model.d)
        support = int(np.count_nonzero(dist <= params.delta))
        if support > best_support:
            best, best_support = model, support
            if best_support >= target:
                break
    if best is None or best_support < 3:
        raise ConsensusError(
            f"no plane with support >= 3 after {params.max_iterations} iterations"
        )
    dist = np.abs(best.a * xs + best.b * ys + best.c * zs + best.d)
    inliers = np.flatnonzero(dist <= params.delta)
    model = PlaneModel(a=best.a, b=best.b, c=best.c, d=best.d, support=len(inliers))
    return PlaneFit(model=model, inliers=inliers, iterations=iterations)


def remove_plane(cloud: PointCloud, plane: PlaneModel, delta: float) -> PointCloud:
    """The off-plane complement: points farther than delta, original order."""
    keep = plane_distances(cloud.points, plane) > delta
    return PointCloud(
        cloud.points[keep],
        densities=None if cloud.densities is None else cloud.densities[keep],
        confidences=None if cloud.confidences is None else cloud.confidences[keep],
    )
