"""Point storage, Max-Min rescaling, and exact k-nearest-neighbor tables.

Every downstream stage (densities, differentials, cluster expansion,
merging) works off the deterministic neighbor tables built here. Two
construction paths exist: a KD-tree path for speed and a brute-force
path that doubles as the test oracle. Both produce bit-identical
tables: candidate neighbors are re-sorted by (distance, point index),
so ties never depend on the backend or the worker count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

THREADS_ENV = "STRUCTCLUST_THREADS"

# Rows at or below this size are cheap enough to brute-force outright.
_BRUTE_N = 512
# KD-trees stop paying off when the dimension rivals log2(n).
_BRUTE_DIM = 12


def default_workers() -> int:
    """Worker count for spatial queries, from STRUCTCLUST_THREADS (default 1).

    Parallel queries return identical results for any worker count; the
    variable only trades wall time.
    """
    raw = os.environ.get(THREADS_ENV, "")
    try:
        workers = int(raw)
    except ValueError:
        return 1
    return workers if workers >= 1 or workers == -1 else 1


@dataclass(frozen=True)
class PointSet:
    """Immutable N x d batch of finite points, optionally with truth labels."""

    coords: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if coords.ndim != 2:
            raise ValueError(f"coords must be 2-D (n, d), got shape {coords.shape}")
        n, d = coords.shape
        if n < 1 or d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite (no NaN/Inf)")
        labels = self.labels
        if labels is not None:
            labels = np.ascontiguousarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValueError(
                    f"labels must have length n={n}, got shape {labels.shape}"
                )
            labels.setflags(write=False)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def subset(self, indices: np.ndarray) -> "PointSet":
        """New PointSet holding the given rows (labels sliced along)."""
        idx = np.asarray(indices, dtype=np.int64)
        labels = self.labels[idx] if self.labels is not None else None
        return PointSet(self.coords[idx], labels)


def minmax_rescale(ps: PointSet) -> PointSet:
    """Map every axis to [0, 1] via (v - min) / (max - min).

    A degenerate axis (max == min) maps to 0 rather than erroring, so a
    constant feature does not poison the dataset. Idempotent: a second
    rescale reproduces the first bitwise on non-degenerate axes.
    """
    lo = ps.coords.min(axis=0)
    hi = ps.coords.max(axis=0)
    span = hi - lo
    span_safe = np.where(span > 0.0, span, 1.0)
    return PointSet((ps.coords - lo) / span_safe, ps.labels)


@dataclass(frozen=True)
class NeighborTable:
    """Per-point ordered k-nearest neighbors (self excluded).

    Rows are sorted ascending by distance; equal distances are ordered
    by ascending point index, which makes the table a pure function of
    the PointSet and k.
    """

    k: int
    neighbor_idx: np.ndarray  # (n, k) int64
    neighbor_dist: np.ndarray  # (n, k) float64

    def __post_init__(self) -> None:
        self.neighbor_idx.setflags(write=False)
        self.neighbor_dist.setflags(write=False)

    @property
    def n(self) -> int:
        return self.neighbor_idx.shape[0]


def _dist_rows(coords: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Canonical Euclidean distances from each block row to every point.

    All paths (brute, KD-tree fixups, merge queries) funnel through this
    single formula so equal inputs give bitwise-equal distances.
    """
    diff = block[:, None, :] - coords[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _brute_neighbors(coords: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    n = coords.shape[0]
    out_idx = np.empty((n, k), dtype=np.int64)
    out_dist = np.empty((n, k), dtype=np.float64)
    chunk = max(1, int(4_000_000 // n))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        dist = _dist_rows(coords, coords[start:stop])
        rows = np.arange(stop - start)
        dist[rows, np.arange(start, stop)] = np.inf
        # stable sort on distance keeps ties in ascending-index order
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        out_idx[start:stop] = order
        out_dist[start:stop] = np.take_along_axis(dist, order, axis=1)
    return out_idx, out_dist


def _lexsort_rows(
    idx: np.ndarray, dist: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise sort by (distance, index): stable index pass, then distance."""
    order = np.argsort(idx, axis=1, kind="stable")
    idx = np.take_along_axis(idx, order, axis=1)
    dist = np.take_along_axis(dist, order, axis=1)
    order = np.argsort(dist, axis=1, kind="stable")
    return np.take_along_axis(idx, order, axis=1), np.take_along_axis(
        dist, order, axis=1
    )


def _fix_row(
    tree: cKDTree, coords: np.ndarray, i: int, radius: float, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Resolve one row with a distance tie at the k-th boundary exactly.

    Collect every candidate within the boundary distance (slightly
    inflated; extras sort past the cut and fall off), then apply the
    canonical (distance, index) order.
    """
    r = radius * (1.0 + 1e-9) + 1e-300
    cand = np.asarray(tree.query_ball_point(coords[i], r), dtype=np.int64)
    cand = cand[cand != i]
    dist = _dist_rows(coords, coords[i : i + 1])[0][cand]
    order = np.lexsort((cand, dist))[:k]
    return cand[order], dist[order]


def _kdtree_neighbors(
    coords: np.ndarray, k: int, workers: int
) -> tuple[np.ndarray, np.ndarray]:
    n = coords.shape[0]
    m = k + 2
    if m > n:
        return _brute_neighbors(coords, k)
    tree = cKDTree(coords)
    qdist, qidx = tree.query(coords, k=m, workers=workers)

    # Columns 0..k hold the k+1 nearest including the query point itself.
    # A strict gap to column k+1 pins that set down exactly.
    tied = qdist[:, k] == qdist[:, k + 1]

    cand_idx = qidx[:, : k + 1]
    # recompute candidate distances with the canonical formula
    diff = coords[cand_idx] - coords[:, None, :]
    cand_dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    idx_sorted, dist_sorted = _lexsort_rows(cand_idx, cand_dist)
    self_mask = idx_sorted == np.arange(n)[:, None]
    bad = tied | (self_mask.sum(axis=1) != 1)

    drop = np.argmax(self_mask, axis=1)
    keep = np.ones((n, k + 1), dtype=bool)
    keep[np.arange(n), drop] = False
    out_idx = idx_sorted[keep].reshape(n, k)
    out_dist = dist_sorted[keep].reshape(n, k)

    for i in np.flatnonzero(bad):
        out_idx[i], out_dist[i] = _fix_row(tree, coords, i, qdist[i, k], k)
    return out_idx, out_dist


def build_neighbor_table(
    ps: PointSet,
    k: int,
    method: str = "auto",
    workers: int | None = None,
) -> NeighborTable:
    """Exact k-nearest-neighbor table under the Euclidean metric.

    method: "kdtree", "brute", or "auto" (brute for small n or high d).
    Raises ValueError unless 1 <= k <= n - 1.
    """
    n = ps.n
    if k < 1 or k > n - 1:
        raise ValueError(f"k={k} must satisfy 1 <= k <= n - 1 with n={n}")
    if method == "auto":
        method = "brute" if (n <= _BRUTE_N or ps.dim > _BRUTE_DIM) else "kdtree"
    if method == "brute":
        idx, dist = _brute_neighbors(ps.coords, k)
    elif method == "kdtree":
        idx, dist = _kdtree_neighbors(
            ps.coords, k, default_workers() if workers is None else workers
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return NeighborTable(k, idx, dist)


def nearest_reference(
    query: np.ndarray,
    ref_coords: np.ndarray,
    ref_point_idx: np.ndarray,
    workers: int | None = None,
) -> np.ndarray:
    """Position (into ref arrays) of each query row's nearest reference point.

    Distance ties are broken by the lowest original point index
    (ref_point_idx). Used by small-cluster merging and isolated-point
    redistribution, which are 1-nearest-neighbor classifications.
    """
    query = np.atleast_2d(np.asarray(query, dtype=np.float64))
    ref_coords = np.atleast_2d(np.asarray(ref_coords, dtype=np.float64))
    ref_point_idx = np.asarray(ref_point_idx, dtype=np.int64)
    nref = ref_coords.shape[0]
    if nref == 0:
        raise ValueError("no reference points to classify against")
    if nref == 1:
        return np.zeros(query.shape[0], dtype=np.int64)

    w = default_workers() if workers is None else workers
    tree = cKDTree(ref_coords)
    qdist, qpos = tree.query(query, k=2, workers=w)
    winner = qpos[:, 0].astype(np.int64)

    for i in np.flatnonzero(qdist[:, 0] == qdist[:, 1]):
        r = qdist[i, 0] * (1.0 + 1e-9) + 1e-300
        cand = np.asarray(tree.query_ball_point(query[i], r), dtype=np.int64)
        dist = _dist_rows(ref_coords, query[i : i + 1])[0][cand]
        best = np.lexsort((ref_point_idx[cand], dist))[0]
        winner[i] = cand[best]
    return winner
