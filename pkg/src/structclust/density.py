"""Point densities, their two normalizations, and directed differentials.

A point's raw density is 1 / r^d with r the mean distance to its
RhoCalculateK nearest neighbors. Two normalized variants coexist on
purpose: division by the dataset maximum (drives differentials and
seed ordering) and division by the dataset mean (drives isolated-point
detection). Differentials are directed and stored sparsely, one slot
per search neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import NeighborTable, PointSet

# Distance floor, relative to the dataset extent, that keeps coincident
# points at a large finite density instead of infinity.
FLOOR_SCALE = 1e-12


def density_floor(ps: PointSet) -> float:
    """Floor for the mean neighbor distance: 1e-12 x bounding-box diagonal."""
    span = ps.coords.max(axis=0) - ps.coords.min(axis=0)
    diag = float(np.sqrt(np.sum(span * span)))
    return FLOOR_SCALE * diag if diag > 0.0 else FLOOR_SCALE


def compute_density(
    nt: NeighborTable, k: int, dim: int, r_floor: float = 0.0
) -> np.ndarray:
    """Raw densities 1 / max(r, r_floor)^dim, r = mean of k nearest distances."""
    if k < 1 or k > nt.k:
        raise ValueError(f"k={k} must satisfy 1 <= k <= table width {nt.k}")
    r = nt.neighbor_dist[:, :k].mean(axis=1)
    return np.maximum(r, r_floor) ** (-float(dim))


def normalize_max(raw: np.ndarray) -> np.ndarray:
    """Divide by the maximum; the result peaks at exactly 1."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("empty density vector")
    return raw / raw.max()


def normalize_mean(raw: np.ndarray) -> np.ndarray:
    """Divide by the mean; the result averages to 1."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("empty density vector")
    return raw / raw.mean()


def compute_differentials(
    nrho: np.ndarray, nt: NeighborTable, search_k: int
) -> np.ndarray:
    """Directed differentials nrho[b] - nrho[a] for b among a's search neighbors.

    Returned as an (n, search_k) array aligned with the neighbor table's
    first search_k slots; no other pairs exist.
    """
    if search_k < 1 or search_k > nt.k:
        raise ValueError(
            f"search_k={search_k} must satisfy 1 <= search_k <= table width {nt.k}"
        )
    nrho = np.asarray(nrho, dtype=np.float64)
    return nrho[nt.neighbor_idx[:, :search_k]] - nrho[:, None]


def detect_isolated(nisrho: np.ndarray, max_iso_point_rho: float) -> np.ndarray:
    """Indices with mean-normalized isolation density below the threshold.

    A threshold of 0 disables detection (densities are strictly positive).
    """
    return np.flatnonzero(np.asarray(nisrho) < max_iso_point_rho)


@dataclass(frozen=True)
class DensityProfile:
    """All density-derived vectors for one PointSet/NeighborTable pair."""

    knrho: np.ndarray  # raw density, RhoCalculateK neighbors
    nrho: np.ndarray  # max-normalized density, in (0, 1]
    isknrho: np.ndarray  # raw isolation density, IsoNeighborK neighbors
    nisrho: np.ndarray  # mean-normalized isolation density, mean 1
    drho_source: np.ndarray  # normalized vector the differentials came from
    drho_values: np.ndarray  # (n, search_k) directed differentials
    drho_neighbor_idx: np.ndarray  # (n, search_k) target of each slot
    search_k: int

    def drho(self, a: int, b: int) -> float:
        """Stored differential a -> b; KeyError if b is not a search neighbor."""
        row = self.drho_neighbor_idx[a]
        hits = np.flatnonzero(row == b)
        if hits.size == 0:
            raise KeyError(f"point {b} is not among the search neighbors of {a}")
        return float(self.drho_values[a, hits[0]])


def build_density_profile(
    ps: PointSet,
    nt: NeighborTable,
    rho_k: int,
    iso_k: int,
    search_k: int,
    differential_source: str = "nrho",
) -> DensityProfile:
    """Compute raw/normalized densities and the differential table in one pass.

    differential_source selects which normalized vector feeds the
    differentials: "nrho" (max-normalized, the default; keeps
    differentials in [-1, 1] so an eps of 4 accepts everything) or
    "nisrho" (mean-normalized) as a sensitivity switch.
    """
    floor = density_floor(ps)
    knrho = compute_density(nt, rho_k, ps.dim, floor)
    nrho = normalize_max(knrho)
    isknrho = compute_density(nt, iso_k, ps.dim, floor)
    nisrho = normalize_mean(isknrho)
    if differential_source == "nrho":
        source = nrho
    elif differential_source == "nisrho":
        source = nisrho
    else:
        raise ValueError(
            f"differential_source must be 'nrho' or 'nisrho', got {differential_source!r}"
        )
    return DensityProfile(
        knrho=knrho,
        nrho=nrho,
        isknrho=isknrho,
        nisrho=nisrho,
        drho_source=source,
        drho_values=compute_differentials(source, nt, search_k),
        drho_neighbor_idx=nt.neighbor_idx[:, :search_k],
        search_k=search_k,
    )
