"""Nearest-neighbor queries over an immutable point-cloud snapshot.

A k-d tree accelerates the search, but results are guaranteed to match a
brute-force scan, including tie-breaking: among equidistant candidates the
lowest point index wins.  To that end tree candidates are re-scored with the
same arithmetic a brute-force scan would use, and the rare query whose
candidate list cannot be proven complete falls back to an exhaustive ball
query.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree, distance

from .metrics import EUCLIDEAN, Metric, get_metric

__all__ = [
    "SpatialIndex",
    "build_index",
    "nearest",
    "k_nearest",
    "nearest_all",
    "k_nearest_all",
    "nearest_normal_filtered",
    "nearest_normal_filtered_all",
]

_EXTRA = 8          # candidates fetched beyond k+1 before resorting to a ball query
_TIE_GUARD = 1e-9   # relative slack absorbing tree/re-score rounding differences
_UNIT_TOL = 1e-6    # allowed deviation of normal vectors from unit length


class SpatialIndex:
    """Frozen snapshot of a point cloud plus its acceleration structure."""

    def __init__(self, points, metric: Metric = EUCLIDEAN):
        pts = np.array(points, dtype=float, copy=True)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ValueError(f"cloud must have shape (n, 2) or (n, 3), got {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("cannot index an empty cloud")
        if not np.isfinite(pts).all():
            raise ValueError("cloud contains non-finite coordinates")
        if metric.periodic and pts.shape[1] != 2:
            raise ValueError("periodic metric is defined for 2D clouds only")
        pts.setflags(write=False)
        self.points = pts
        self.metric = metric
        if metric.periodic:
            self._query_points = metric.wrap(pts)
            self._tree = cKDTree(self._query_points, boxsize=1.0)
        else:
            self._query_points = pts
            self._tree = cKDTree(pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def build_index(cloud, metric="euclidean") -> SpatialIndex:
    return SpatialIndex(cloud, get_metric(metric))


def _sort_candidates(index: SpatialIndex, rows, cand):
    """Exact squared distances for candidate ids, ordered by (distance, id)."""
    d2 = index.metric.distance2(index.points[rows][:, None, :], index.points[cand])
    order = np.argsort(cand, axis=1, kind="stable")
    cand = np.take_along_axis(cand, order, axis=1)
    d2 = np.take_along_axis(d2, order, axis=1)
    order = np.argsort(d2, axis=1, kind="stable")       # stable: ties stay id-ascending
    return np.take_along_axis(cand, order, axis=1), np.take_along_axis(d2, order, axis=1)


def _ball_exact(index: SpatialIndex, i: int, k: int, radius: float):
    cand = np.asarray(index._tree.query_ball_point(index._query_points[i], radius),
                      dtype=np.intp)
    cand, _ = _sort_candidates(index, np.array([i]), cand[None, :])
    cand = cand[0]
    return cand[cand != i][:k]

def _k_nearest_rows(index: SpatialIndex, rows, k: int):
    n = index.n
    if int(k) != k or not 1 <= k <= n - 1:
        raise ValueError(f"k must be an integer in [1, {n - 1}], got {k}")
    rows = np.asarray(rows, dtype=np.intp)
    m = min(n, k + 1 + _EXTRA)
    d_tree, cand = index._tree.query(index._query_points[rows], k=m)
    if cand.max() >= n:
        # scipy marks unreachable neighbors with index n; with finite inputs
        # that only happens when squared distances overflow
        raise ValueError("neighbor query failed; coordinates are too extreme")
    cand, d2 = _sort_candidates(index, rows, cand.astype(np.intp))

    keep = cand != rows[:, None]
    front = np.argsort(~keep, axis=1, kind="stable")    # kept columns first, order intact
    sel = np.take_along_axis(cand, front[:, :k], axis=1)
    dk = np.sqrt(np.take_along_axis(d2, front[:, :k], axis=1)[:, -1])

    if m < n:
        # The candidate list is provably complete only if the tree saw
        # strictly beyond the k-th exact distance; otherwise rescan that row.
        unsafe = ~(d_tree[:, -1] > dk * (1.0 + _TIE_GUARD))
        for r in np.nonzero(unsafe)[0]:
            sel[r] = _ball_exact(index, int(rows[r]), k, dk[r] * (1.0 + _TIE_GUARD))
    return sel


def nearest(index: SpatialIndex, i: int) -> int:
    """Index of the nearest other point; distance ties go to the lowest index."""
    if index.n < 2:
        raise ValueError("nearest-neighbor query needs at least 2 points")
    if not 0 <= i < index.n:
        raise ValueError(f"point index {i} out of range for {index.n} points")
    return int(_k_nearest_rows(index, [i], 1)[0, 0])


def k_nearest(index: SpatialIndex, i: int, k: int):
    """The k nearest other points, ascending by distance then by index."""
    if not 0 <= i < index.n:
        raise ValueError(f"point index {i} out of range for {index.n} points")
    return _k_nearest_rows(index, [i], k)[0]


def nearest_all(index: SpatialIndex):
    """nearest() for every point at once; shape (n,)."""
    if index.n < 2:
        raise ValueError("nearest-neighbor query needs at least 2 points")
    return _k_nearest_rows(index, np.arange(index.n), 1)[:, 0]


def k_nearest_all(index: SpatialIndex, k: int):
    """k_nearest() for every point at once; shape (n, k)."""
    return _k_nearest_rows(index, np.arange(index.n), k)


def _check_normals(cloud, normals):
    x = np.asarray(cloud, dtype=float)
    nrm = np.asarray(normals, dtype=float)
    if nrm.shape != x.shape:
        raise ValueError(f"normals shape {nrm.shape} does not match cloud shape {x.shape}")
    lengths = np.sqrt((nrm * nrm).sum(axis=1))
    if np.any(np.abs(lengths - 1.0) > _UNIT_TOL):
        raise ValueError("normals must be unit length")
    return x, nrm


def nearest_normal_filtered(cloud, normals, i: int, theta_max: float):
    """Nearest point whose normal is within theta_max of normals[i], or None.

    The angle test is strict (angle < theta_max); candidates failing it are
    ignored entirely, so the returned point may be farther than the plain
    nearest neighbor.  Euclidean metric.
    """
    x, nrm = _check_normals(cloud, normals)
    if not 0 <= i < len(x):
        raise ValueError(f"point index {i} out of range for {len(x)} points")
    if not 0 < theta_max <= np.pi:
        raise ValueError(f"theta_max must be in (0, pi], got {theta_max}")
    ang = np.arccos(np.clip(nrm @ nrm[i], -1.0, 1.0))
    d2 = ((x - x[i]) ** 2).sum(axis=1)
    d2[i] = np.inf
    d2[ang >= theta_max] = np.inf
    j = int(np.argmin(d2))                 # argmin takes the first (lowest) index on ties
    return None if np.isinf(d2[j]) else j


def nearest_normal_filtered_all(cloud, normals, theta_max: float):
    """Vectorized nearest_normal_filtered for every point; -1 where none qualifies."""
    x, nrm = _check_normals(cloud, normals)
    if not 0 < theta_max <= np.pi:
        raise ValueError(f"theta_max must be in (0, pi], got {theta_max}")
    if len(x) < 2:
        raise ValueError("filtered nearest-neighbor query needs at least 2 points")
    d2 = distance.cdist(x, x, "sqeuclidean")
    ang = np.arccos(np.clip(nrm @ nrm.T, -1.0, 1.0))
    d2[ang >= theta_max] = np.inf
    np.fill_diagonal(d2, np.inf)
    out = np.argmin(d2, axis=1).astype(np.intp)
    out[np.isinf(d2[np.arange(len(x)), out])] = -1
    return out
