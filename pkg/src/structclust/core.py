"""Seed-and-expand clustering on the secondary directed differential.

A cluster grows from the densest unclassified point. A neighbor b of a
cluster member a is absorbed when some search neighbor e of b (not an
isolated point) continues the density trend: |drho(a,b) - drho(b,e)|
below the eps threshold. Since the isolated set is fixed before
expansion starts, that acceptance test is static, so the whole
expansion is plain reachability over a precomputed edge set; the
breadth-first order only decides which seed claims contested points
first, and seeds are ordered by descending density.

Mode "knn" forces eps = 4. Differentials live in [-1, 1], so every
test passes and expansion degenerates to directed k-NN reachability.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .density import DensityProfile, build_density_profile, detect_isolated
from .geometry import NeighborTable, PointSet, build_neighbor_table, nearest_reference

# eps at or above this value accepts every expansion (differential span is 2).
KNN_EPS = 4.0

MODE_SD = "sd"
MODE_KNN = "knn"


@dataclass(frozen=True)
class ParamSet:
    """Every tunable coefficient, with the published defaults."""

    search_neighbor_k: int = 7
    rho_calculate_k: int = 4
    iso_neighbor_k: int = 4
    max_iso_point_rho: float = 0.07
    min_cluster_point: int = 35
    min_knn_cluster_point: int = 7
    eps: float = 0.075
    mineps: float = 0.045
    maxeps: float = 0.075
    adjust: float = 0.005
    fraction_f: Optional[float] = None
    mode: str = MODE_SD
    kon: bool = True
    ioc: bool = True
    merge_enabled: bool = True
    redistribute_isolated: bool = False
    # Differentials derive from the max-normalized densities; the
    # mean-normalized alternative stays one switch away.
    differential_source: str = "nrho"

    def __post_init__(self) -> None:
        if min(self.search_neighbor_k, self.rho_calculate_k, self.iso_neighbor_k) < 1:
            raise ValueError("all neighbor counts must be >= 1")
        if self.min_knn_cluster_point > self.min_cluster_point:
            raise ValueError(
                f"min_knn_cluster_point={self.min_knn_cluster_point} must not exceed "
                f"min_cluster_point={self.min_cluster_point}"
            )
        if self.mineps > self.maxeps:
            raise ValueError(f"mineps={self.mineps} must not exceed maxeps={self.maxeps}")
        if self.adjust <= 0.0:
            raise ValueError("adjust must be positive")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.fraction_f is not None and not 0.0 < self.fraction_f < 1.0:
            raise ValueError("fraction_f must lie in (0, 1)")
        if self.mode not in (MODE_SD, MODE_KNN):
            raise ValueError(f"mode must be {MODE_SD!r} or {MODE_KNN!r}")
        if self.differential_source not in ("nrho", "nisrho"):
            raise ValueError("differential_source must be 'nrho' or 'nisrho'")

    def with_(self, **changes) -> "ParamSet":
        return replace(self, **changes)


def effective_min_size(params: ParamSet, n: int) -> int:
    """Minimum size for an effective cluster.

    max(min_cluster_point, ceil((1 - f) * n)) when the fraction rule is
    active, else plain min_cluster_point.
    """
    if params.fraction_f is None:
        return params.min_cluster_point
    return max(params.min_cluster_point, math.ceil((1.0 - params.fraction_f) * n))


@dataclass
class Assignment:
    """Per-point cluster codes plus the explicit cluster member lists.

    cp[i] is -1 while unclassified, 0 for the isolated cluster, and the
    cluster id (>= 1) otherwise. clusters[0] always holds the isolated
    points (possibly empty); ids 1..m are dense and nonempty.
    isolated_tags marks clusters (id >= 1) that hold per-stage isolated
    points kept separate when they are not pooled globally.
    """

    cp: np.ndarray
    clusters: list[np.ndarray]
    effective_min: int
    isolated_tags: dict[int, str] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.cp.shape[0]

    @property
    def n_clusters(self) -> int:
        """Number of non-isolated clusters."""
        return len(self.clusters) - 1

    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]

    def validate(self) -> None:
        """Check the cp/clusters consistency invariants (used by tests)."""
        seen = np.zeros(self.n, dtype=bool)
        for cid, members in enumerate(self.clusters):
            if cid >= 1 and len(members) == 0:
                raise AssertionError(f"cluster {cid} is empty")
            if np.any(self.cp[members] != cid):
                raise AssertionError(f"cp mismatch for cluster {cid}")
            if np.any(seen[members]):
                raise AssertionError("clusters overlap")
            seen[members] = True
        if not np.all(seen[self.cp >= 0]):
            raise AssertionError("classified point missing from its cluster")


def _assignment_from_cluster_lists(
    n: int,
    isolated: np.ndarray,
    members: list[np.ndarray],
    effective_min: int,
    tags: dict[int, str] | None = None,
) -> Assignment:
    cp = np.full(n, -1, dtype=np.int64)
    cp[isolated] = 0
    clusters = [np.sort(np.asarray(isolated, dtype=np.int64))]
    for part in members:
        part = np.sort(np.asarray(part, dtype=np.int64))
        if len(part) == 0:
            continue
        cp[part] = len(clusters)
        clusters.append(part)
    return Assignment(cp, clusters, effective_min, dict(tags or {}))


def acceptance_edges(
    profile: DensityProfile, cp: np.ndarray, eps: float
) -> np.ndarray:
    """Boolean (n, search_k) matrix: may a absorb its j-th search neighbor.

    Slot (a, j) is True when some search neighbor e of b = idx[a, j],
    with cp[e] != 0, satisfies |drho(a,b) - drho(b,e)| < eps. Expanding
    the differentials, that is |2*rho[b] - rho[a] - rho[e]| < eps with
    rho the profile's differential source vector.
    """
    nbr = profile.drho_neighbor_idx
    rho = profile.drho_source
    evals = np.where(cp[nbr] != 0, rho[nbr], np.nan)
    target = 2.0 * rho[nbr] - rho[:, None]
    # evals[nbr] has shape (n, S, S): the e-candidates of each b slot.
    hit = np.abs(target[:, :, None] - evals[nbr]) < eps
    return hit.any(axis=2)


def _expand_clusters(
    profile: DensityProfile, cp: np.ndarray, eps: float
) -> list[np.ndarray]:
    """Run the seeded expansions; mutates cp, returns cluster member arrays."""
    n = cp.shape[0]
    accept = acceptance_edges(profile, cp, eps)
    nbr = profile.drho_neighbor_idx
    adjacency = [nbr[i][accept[i]].tolist() for i in range(n)]

    seed_order = np.lexsort((np.arange(n), -profile.nrho)).tolist()
    clusters: list[np.ndarray] = []
    for seed in seed_order:
        if cp[seed] != -1:
            continue
        cid = len(clusters) + 1
        cp[seed] = cid
        members = [seed]
        queue = deque((seed,))
        while queue:
            a = queue.popleft()
            for b in adjacency[a]:
                if cp[b] == -1:
                    cp[b] = cid
                    members.append(b)
                    queue.append(b)
        clusters.append(np.array(sorted(members), dtype=np.int64))
    return clusters


def core_cluster(
    ps: PointSet,
    params: ParamSet,
    neighbor_table: NeighborTable | None = None,
    profile: DensityProfile | None = None,
    workers: int | None = None,
) -> Assignment:
    """One full run: densities, isolated marking, expansion, optional merge.

    A precomputed NeighborTable/DensityProfile pair may be passed when
    the caller runs the same subset repeatedly (the eps adaptation loop
    does); they must have been built on exactly `ps`.
    """
    n = ps.n
    threshold = effective_min_size(params, n)
    if n == 1:
        # Sole point: one cluster; with one point nisrho == 1, never isolated.
        return _assignment_from_cluster_lists(
            1, np.empty(0, dtype=np.int64), [np.array([0])], threshold
        )

    # Degenerate small inputs: clamp every neighbor count to n - 1.
    s_k = min(params.search_neighbor_k, n - 1)
    r_k = min(params.rho_calculate_k, n - 1)
    i_k = min(params.iso_neighbor_k, n - 1)
    table_k = max(s_k, r_k, i_k)

    if neighbor_table is None:
        neighbor_table = build_neighbor_table(ps, table_k, workers=workers)
    elif neighbor_table.k < table_k:
        raise ValueError(
            f"precomputed table width {neighbor_table.k} < required {table_k}"
        )
    if profile is None:
        profile = build_density_profile(
            ps, neighbor_table, r_k, i_k, s_k, params.differential_source
        )

    cp = np.full(n, -1, dtype=np.int64)
    if params.kon:
        cp[detect_isolated(profile.nisrho, params.max_iso_point_rho)] = 0

    eps_eff = KNN_EPS if params.mode == MODE_KNN else params.eps
    isolated = np.flatnonzero(cp == 0)
    members = _expand_clusters(profile, cp, eps_eff)
    assignment = _assignment_from_cluster_lists(n, isolated, members, threshold)
    if params.merge_enabled:
        assignment = merge_small(assignment, ps, threshold, workers=workers)
    return assignment


def merge_small(
    assignment: Assignment,
    ps: PointSet,
    threshold: int,
    workers: int | None = None,
) -> Assignment:
    """Dissolve non-isolated clusters below threshold into the big ones.

    Each point of a small cluster joins the cluster of its nearest point
    among members of clusters that reach the threshold (1-NN, ties to
    the lowest point index). If no cluster reaches the threshold, all
    non-isolated points collapse into a single cluster. The isolated
    cluster is never a source or a target.
    """
    if np.any(assignment.cp == -1):
        raise ValueError("assignment must be complete before merging")
    big = [c for c in assignment.clusters[1:] if len(c) >= threshold]
    small = [c for c in assignment.clusters[1:] if len(c) < threshold]
    isolated = assignment.clusters[0]
    if not small:
        return _assignment_from_cluster_lists(
            assignment.n, isolated, big, threshold, assignment.isolated_tags
        )
    if not big:
        merged = np.concatenate(small) if small else np.empty(0, dtype=np.int64)
        return _assignment_from_cluster_lists(
            assignment.n, isolated, [merged], threshold
        )

    ref_idx = np.concatenate(big)
    ref_owner = np.concatenate(
        [np.full(len(c), i, dtype=np.int64) for i, c in enumerate(big)]
    )
    moved = np.concatenate(small)
    pos = nearest_reference(
        ps.coords[moved], ps.coords[ref_idx], ref_idx, workers=workers
    )
    owners = ref_owner[pos]
    new_members = [
        np.concatenate([c, moved[owners == i]]) for i, c in enumerate(big)
    ]
    return _assignment_from_cluster_lists(
        assignment.n, isolated, new_members, threshold
    )


def count_effective(assignment: Assignment, threshold: int) -> int:
    """Number of non-isolated clusters whose size reaches the threshold."""
    return sum(1 for c in assignment.clusters[1:] if len(c) >= threshold)
