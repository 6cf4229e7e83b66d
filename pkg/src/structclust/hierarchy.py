"""Hierarchical refinement and the self-adapting full pipeline.

The hierarchical scheme first clusters by plain k-NN reachability,
then repeatedly re-runs the structure-detecting core on each resulting
cluster. Because every sub-run recomputes densities on its own subset,
normalization happens at the subset's granularity, which is what lets
regions dwarfed by a remote density spike be told apart on the next
level. A subset whose refinement no longer splits is finalized with
isolated-point detection switched on.

The self-adapting variant additionally: drops k-NN clusters that are
too small even for the relaxed bound into the isolated pool, finalizes
mid-sized clusters directly, and picks eps per subset by scanning
upward from mineps until the effective-cluster count drops.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import (
    MODE_KNN,
    MODE_SD,
    Assignment,
    ParamSet,
    core_cluster,
    count_effective,
    effective_min_size,
)
from .density import DensityProfile, build_density_profile
from .geometry import NeighborTable, PointSet, build_neighbor_table, nearest_reference


@dataclass
class _Collector:
    """Finished clusters (with optional stage tag) and the pooled isolated set."""

    final: list[tuple[np.ndarray, str | None]] = field(default_factory=list)
    total_isolated: list[np.ndarray] = field(default_factory=list)

    def add_isolated(self, indices: np.ndarray, pooled: bool, tag: str) -> None:
        if len(indices) == 0:
            return
        if pooled:
            self.total_isolated.append(indices)
        else:
            self.final.append((indices, tag))

    def add_run(self, sub: Assignment, idx: np.ndarray, ioc: bool, stage: str) -> None:
        """Map a sub-run's clusters back to original indices and collect them."""
        self.add_isolated(idx[sub.clusters[0]], ioc, f"{stage}-isolated")
        for members in sub.clusters[1:]:
            if len(members):
                self.final.append((idx[members], None))


def _subset_tables(
    sub: PointSet, params: ParamSet, workers: int | None
) -> tuple[NeighborTable, DensityProfile]:
    n = sub.n
    s_k = min(params.search_neighbor_k, n - 1)
    r_k = min(params.rho_calculate_k, n - 1)
    i_k = min(params.iso_neighbor_k, n - 1)
    nt = build_neighbor_table(sub, max(s_k, r_k, i_k), workers=workers)
    return nt, build_density_profile(
        sub, nt, r_k, i_k, s_k, params.differential_source
    )


def adapt_eps(
    subset: np.ndarray,
    ps: PointSet,
    params: ParamSet,
    neighbor_table: NeighborTable | None = None,
    profile: DensityProfile | None = None,
    workers: int | None = None,
) -> float:
    """Scan eps upward from mineps until the effective-cluster count drops.

    Each probe runs the core without merging and counts clusters that
    reach the effective minimum size. The first decrease returns the
    previous eps (the last one attaining the running maximum); if the
    count never drops, the scan ends at maxeps and returns it.
    """
    idx = np.asarray(subset, dtype=np.int64)
    sub = ps.subset(idx)
    if neighbor_table is None or profile is None:
        neighbor_table, profile = _subset_tables(sub, params, workers)
    threshold = effective_min_size(params, sub.n)
    probe = params.with_(mode=MODE_SD, kon=False, merge_enabled=False)

    best = 0
    prev = params.mineps
    eps = params.mineps
    while True:
        run = core_cluster(
            sub, probe.with_(eps=eps), neighbor_table, profile, workers=workers
        )
        count = count_effective(run, threshold)
        if count < best:
            return prev
        best = count
        prev = eps
        if eps >= params.maxeps:
            return params.maxeps
        eps = min(eps + params.adjust, params.maxeps)


def _refine(
    ps: PointSet,
    params: ParamSet,
    queue: deque,
    collector: _Collector,
    adaptive: bool,
    workers: int | None,
    trace: list | None,
) -> None:
    """Drain the refinement queue: split subsets until each stops splitting."""
    while queue:
        idx = queue.popleft()
        sub = ps.subset(idx)
        if sub.n == 1:
            collector.final.append((idx, None))
            continue
        nt, profile = _subset_tables(sub, params, workers)
        eps = (
            adapt_eps(idx, ps, params, nt, profile, workers=workers)
            if adaptive
            else params.eps
        )
        if trace is not None:
            trace.append({"subset_size": int(sub.n), "eps": float(eps)})
        run = core_cluster(
            sub,
            params.with_(mode=MODE_SD, kon=False, merge_enabled=True, eps=eps),
            nt,
            profile,
            workers=workers,
        )
        parts = [c for c in run.clusters[1:] if len(c)]
        if len(parts) <= 1:
            final = core_cluster(
                sub,
                params.with_(mode=MODE_SD, kon=True, merge_enabled=True, eps=eps),
                nt,
                profile,
                workers=workers,
            )
            collector.add_run(final, idx, params.ioc, "sd")
        else:
            for part in parts:
                queue.append(idx[part])


def _assemble(
    n: int, collector: _Collector, effective_min: int
) -> Assignment:
    cp = np.full(n, -1, dtype=np.int64)
    if collector.total_isolated:
        isolated = np.sort(np.concatenate(collector.total_isolated))
    else:
        isolated = np.empty(0, dtype=np.int64)
    cp[isolated] = 0
    clusters = [isolated]
    tags: dict[int, str] = {}
    for members, tag in collector.final:
        if len(members) == 0:
            continue
        cid = len(clusters)
        members = np.sort(members)
        cp[members] = cid
        clusters.append(members)
        if tag is not None:
            tags[cid] = tag
    return Assignment(cp, clusters, effective_min, tags)


def relabel_by_size(assignment: Assignment) -> Assignment:
    """Renumber clusters 1..m by descending size (stable); id 0 is untouched."""
    order = sorted(
        range(1, len(assignment.clusters)),
        key=lambda cid: (-len(assignment.clusters[cid]), cid),
    )
    clusters = [assignment.clusters[0]]
    cp = np.full(assignment.n, -1, dtype=np.int64)
    cp[assignment.clusters[0]] = 0
    tags: dict[int, str] = {}
    for new_id, old_id in enumerate(order, start=1):
        members = assignment.clusters[old_id]
        cp[members] = new_id
        clusters.append(members)
        if old_id in assignment.isolated_tags:
            tags[new_id] = assignment.isolated_tags[old_id]
    return Assignment(cp, clusters, assignment.effective_min, tags)


def sdc_hsdd_nd(
    ps: PointSet, params: ParamSet, workers: int | None = None
) -> Assignment:
    """Hierarchical refinement: k-NN pre-pass, then fixed-eps refinement."""
    if ps.n < 1:
        raise ValueError("empty point set")
    base = core_cluster(
        ps,
        params.with_(mode=MODE_KNN, kon=False, merge_enabled=True),
        workers=workers,
    )
    collector = _Collector()
    queue = deque(c for c in base.clusters[1:] if len(c))
    _refine(ps, params, queue, collector, adaptive=False, workers=workers, trace=None)
    assignment = _assemble(ps.n, collector, effective_min_size(params, ps.n))
    if params.redistribute_isolated:
        assignment = redistribute_isolated(assignment, ps, workers=workers)
    return relabel_by_size(assignment)


def sdc_hsdd_ndsa(
    ps: PointSet,
    params: ParamSet,
    workers: int | None = None,
    trace: list | None = None,
) -> Assignment:
    """Full pipeline with self-adapting eps and small-cluster protection.

    trace, when given, receives one {"subset_size", "eps"} record per
    refined subset (the chosen eps values always lie in
    [mineps, maxeps]).
    """
    if ps.n < 1:
        raise ValueError("empty point set")
    n = ps.n
    threshold = effective_min_size(params, n)
    base = core_cluster(
        ps,
        params.with_(mode=MODE_KNN, kon=False, merge_enabled=False),
        workers=workers,
    )

    collector = _Collector()
    queue: deque = deque()
    too_small: list[np.ndarray] = []
    for members in base.clusters[1:]:
        if len(members) == 0:
            continue
        if len(members) < params.min_knn_cluster_point:
            too_small.append(members)
        elif len(members) < threshold:
            # Small enough to hold at most one cluster: finalize directly.
            final = core_cluster(
                ps.subset(members),
                params.with_(mode=MODE_KNN, kon=True, merge_enabled=True),
                workers=workers,
            )
            collector.add_run(final, members, params.ioc, "knn")
        else:
            queue.append(members)
    if too_small:
        pool = np.sort(np.concatenate(too_small))
        collector.add_isolated(pool, params.ioc, "knn-isolated")

    _refine(ps, params, queue, collector, adaptive=True, workers=workers, trace=trace)
    assignment = _assemble(n, collector, threshold)
    if params.redistribute_isolated:
        # Redistribution targets every non-isolated cluster: small genuine
        # clusters keep their strays instead of losing them to a distant
        # cluster that happens to reach the effective size.
        assignment = redistribute_isolated(assignment, ps, workers=workers)
    return relabel_by_size(assignment)


def redistribute_isolated(
    assignment: Assignment,
    ps: PointSet,
    min_size: int | None = None,
    workers: int | None = None,
) -> Assignment:
    """Reassign isolated points to the cluster of their nearest member.

    Targets are the clusters reaching min_size when any do (falling back
    to every non-isolated cluster otherwise); with min_size None all
    non-isolated clusters are targets. Clusters tagged as per-stage
    isolated pools are treated as sources, not targets. If no target
    exists, the assignment is returned unchanged with a warning.
    """
    sources = [assignment.clusters[0]]
    targets: list[tuple[int, np.ndarray]] = []
    for cid in range(1, len(assignment.clusters)):
        if cid in assignment.isolated_tags:
            sources.append(assignment.clusters[cid])
        else:
            targets.append((cid, assignment.clusters[cid]))
    if min_size is not None:
        sized = [(cid, c) for cid, c in targets if len(c) >= min_size]
        targets = sized if sized else targets

    moved = np.concatenate(sources) if sources else np.empty(0, dtype=np.int64)
    if len(moved) == 0:
        return assignment
    if not targets:
        warnings.warn(
            "no non-isolated cluster exists; isolated points left in place",
            RuntimeWarning,
            stacklevel=2,
        )
        return assignment

    ref_idx = np.concatenate([c for _, c in targets])
    ref_owner = np.concatenate(
        [np.full(len(c), i, dtype=np.int64) for i, (_, c) in enumerate(targets)]
    )
    pos = nearest_reference(
        ps.coords[moved], ps.coords[ref_idx], ref_idx, workers=workers
    )
    owners = ref_owner[pos]
    merged: dict[int, np.ndarray] = {}
    for slot, (cid, members) in enumerate(targets):
        gained = moved[owners == slot]
        merged[cid] = (
            np.sort(np.concatenate([members, gained])) if len(gained) else members
        )

    cp = np.full(assignment.n, -1, dtype=np.int64)
    clusters = [np.empty(0, dtype=np.int64)]
    for cid in range(1, len(assignment.clusters)):
        if cid in assignment.isolated_tags:
            continue
        members = merged.get(cid, assignment.clusters[cid])
        new_id = len(clusters)
        cp[members] = new_id
        clusters.append(members)
    return Assignment(cp, clusters, assignment.effective_min, {})
